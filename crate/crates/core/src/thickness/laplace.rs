use rayon::prelude::*;

use crate::volume::{Connectivity, Dims, Mask, VolumeData, VoxelVolume};

use super::surfaces::{Region, Surfaces};
use super::ThicknessError;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 20_000;

/// Potential on the myocardium: 1 on the epicardium, 0 on the endocardium,
/// harmonic in between.
#[derive(Debug, Clone)]
pub struct PotentialField {
    surfaces: Surfaces,
    psi: Vec<f64>,
    residual_history: Vec<f64>,
    iterations_used: usize,
    converged: bool,
}

impl PotentialField {
    pub fn surfaces(&self) -> &Surfaces {
        &self.surfaces
    }

    pub fn dims(&self) -> Dims {
        self.surfaces.dims()
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.surfaces.spacing()
    }

    /// Potential per voxel; zero outside the myocardium.
    pub fn values(&self) -> &[f64] {
        &self.psi
    }

    #[inline]
    pub fn value(&self, index: usize) -> f64 {
        self.psi[index]
    }

    pub fn epi_set(&self) -> &[usize] {
        self.surfaces.epi_set()
    }

    pub fn endo_set(&self) -> &[usize] {
        self.surfaces.endo_set()
    }

    pub fn domain_mask(&self) -> Mask {
        self.surfaces.domain_mask()
    }

    /// Largest absolute update of each completed sweep.
    pub fn residual_history(&self) -> &[f64] {
        &self.residual_history
    }

    pub fn iterations_used(&self) -> usize {
        self.iterations_used
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// True when the wall has no interior voxel; no sweep was run.
    pub fn is_boundary_only(&self) -> bool {
        self.surfaces.interior_count() == 0
    }

    /// The potential as an f32 volume.
    pub fn to_volume(&self) -> VoxelVolume {
        let data = VolumeData::F32(self.psi.iter().map(|&v| v as f32).collect());
        VoxelVolume::new(self.dims(), self.spacing(), data).expect("valid geometry")
    }
}

/// Jacobi relaxation of Laplace's equation over the myocardium interior.
///
/// Each sweep replaces every interior value by the mean of its in-wall face
/// neighbors from the previous sweep; neighbors outside the wall or the grid
/// are left out of the mean. Boundary voxels are never updated. Interior
/// values start at 0.5. Iteration stops once the largest update falls below
/// `tol`, or after `max_iter` sweeps with `converged` left false.
pub fn solve_laplace(surfaces: &Surfaces, tol: f64, max_iter: usize) -> Result<PotentialField, ThicknessError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(ThicknessError::InvalidTolerance(tol));
    }
    if max_iter == 0 {
        return Err(ThicknessError::InvalidIterationLimit);
    }
    if surfaces.epi_set().is_empty() {
        return Err(ThicknessError::NoEpicardialSurface);
    }
    if surfaces.endo_set().is_empty() {
        return Err(ThicknessError::NoEndocardialSurface);
    }

    let dims = surfaces.dims();
    let mut psi = vec![0.0; dims.len()];
    for &i in surfaces.epi_set() {
        psi[i] = 1.0;
    }

    // Compressed neighbor lists for interior voxels.
    let interior: Vec<usize> = (0..dims.len()).filter(|&i| surfaces.region(i) == Region::Interior).collect();
    let mut offsets = Vec::with_capacity(interior.len() + 1);
    let mut neighbors = Vec::with_capacity(interior.len() * 6);
    offsets.push(0);
    for &i in &interior {
        neighbors.extend(dims.neighbors(i, Connectivity::Six).filter(|&j| surfaces.region(j).is_wall()));
        offsets.push(neighbors.len());
    }
    for &i in &interior {
        psi[i] = 0.5;
    }

    let mut residual_history = Vec::new();
    let mut converged = interior.is_empty();
    let mut next = vec![0.0; interior.len()];
    while !converged && residual_history.len() < max_iter {
        let prev = &psi;
        let max_update = next
            .par_iter_mut()
            .enumerate()
            .map(|(k, out)| {
                let nb = &neighbors[offsets[k]..offsets[k + 1]];
                let mean = nb.iter().map(|&j| prev[j]).sum::<f64>() / nb.len() as f64;
                *out = mean;
                (mean - prev[interior[k]]).abs()
            })
            .reduce(|| 0.0, f64::max);
        for (&i, &v) in interior.iter().zip(&next) {
            psi[i] = v;
        }
        residual_history.push(max_update);
        converged = max_update < tol;
    }

    Ok(PotentialField {
        surfaces: surfaces.clone(),
        psi,
        iterations_used: residual_history.len(),
        residual_history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{make_shell, make_slab, voxel_center, ShellSpec};
    use crate::thickness::classify_surfaces;

    fn check_max_principle(field: &PotentialField) {
        let s = field.surfaces();
        for i in 0..field.dims().len() {
            match s.region(i) {
                Region::Epicardium => assert_eq!(field.value(i), 1.0),
                Region::Endocardium => assert_eq!(field.value(i), 0.0),
                Region::Interior => {
                    let v = field.value(i);
                    assert!((0.0..=1.0).contains(&v), "interior value {v}");
                }
                _ => {}
            }
        }
    }

    #[test]
    fn slab_potential_is_linear() {
        let s = classify_surfaces(&make_slab(10.0, 1.0, 20.0).unwrap()).unwrap();
        let f = solve_laplace(&s, 1e-6, 20_000).unwrap();
        assert!(f.converged());
        let d = f.dims();
        // Endocardium centers at grid z = 2, epicardium at z = 11.
        let mut worst: f64 = 0.0;
        for i in 0..d.len() {
            if s.region(i).is_wall() {
                let z = d.coords(i).2 as f64;
                worst = worst.max((f.value(i) - (z - 2.0) / 9.0).abs());
            }
        }
        assert!(worst <= 1e-5, "max error {worst}");
        assert!(*f.residual_history().last().unwrap() < 1e-6);
    }

    /// Largest interior deviation from the analytic radial harmonic
    /// `(1/r_in - 1/r) / (1/r_in - 1/r_out)` with the nominal radii.
    fn harmonic_deviation(spacing: f64) -> f64 {
        let spec = ShellSpec::new(10.0, 15.0, spacing);
        let s = classify_surfaces(&make_shell(&spec).unwrap()).unwrap();
        let f = solve_laplace(&s, 1e-6, 20_000).unwrap();
        assert!(f.converged());
        check_max_principle(&f);
        let c = spec.center_mm();
        let mut worst: f64 = 0.0;
        for i in 0..f.dims().len() {
            if s.region(i) == Region::Interior {
                let p = voxel_center(f.dims(), f.spacing(), i);
                let r = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt();
                let exact = (1.0 / 10.0 - 1.0 / r) / (1.0 / 10.0 - 1.0 / 15.0);
                worst = worst.max((f.value(i) - exact).abs());
            }
        }
        worst
    }

    #[test]
    fn shell_potential_converges_to_radial_harmonic() {
        // Boundary voxels sit anywhere within one voxel inside each sphere, which
        // bounds the pointwise agreement; refinement must shrink the gap.
        let coarse = harmonic_deviation(1.0);
        let fine = harmonic_deviation(0.5);
        assert!(coarse < 0.15, "1 mm deviation {coarse}");
        assert!(fine < 0.65 * coarse, "0.5 mm deviation {fine} vs {coarse}");
    }

    #[test]
    fn max_principle_holds_at_every_iteration_count() {
        let s = classify_surfaces(&make_shell(&ShellSpec::new(4.0, 8.0, 1.0)).unwrap()).unwrap();
        for iters in [1, 2, 3, 7, 30] {
            let f = solve_laplace(&s, 1e-12, iters).unwrap();
            assert_eq!(f.iterations_used(), iters);
            assert!(!f.converged());
            check_max_principle(&f);
        }
    }

    #[test]
    fn residuals_decay_over_windows() {
        let s = classify_surfaces(&make_shell(&ShellSpec::new(6.0, 12.0, 1.0)).unwrap()).unwrap();
        let f = solve_laplace(&s, 1e-9, 20_000).unwrap();
        let h = f.residual_history();
        assert!(h.len() > 100);
        let window_max: Vec<f64> =
            (0..=h.len() - 100).map(|k| h[k..k + 100].iter().cloned().fold(0.0, f64::max)).collect();
        assert!(window_max.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn boundary_only_wall_needs_no_sweeps() {
        let s = classify_surfaces(&make_slab(2.0, 1.0, 4.0).unwrap()).unwrap();
        let f = solve_laplace(&s, 1e-6, 100).unwrap();
        assert!(f.is_boundary_only());
        assert!(f.converged());
        assert_eq!(f.iterations_used(), 0);
        check_max_principle(&f);
    }

    #[test]
    fn invalid_parameters() {
        let s = classify_surfaces(&make_slab(4.0, 1.0, 4.0).unwrap()).unwrap();
        assert_eq!(solve_laplace(&s, 0.0, 10).unwrap_err(), ThicknessError::InvalidTolerance(0.0));
        assert_eq!(solve_laplace(&s, 1e-6, 0).unwrap_err(), ThicknessError::InvalidIterationLimit);
        let single = classify_surfaces(&make_slab(1.0, 1.0, 4.0).unwrap()).unwrap();
        assert_eq!(solve_laplace(&single, 1e-6, 10).unwrap_err(), ThicknessError::NoEpicardialSurface);
    }
}
