use crate::volume::{largest_component, Connectivity, Dims, LabelVolume, Mask, BLOOD_POOL, MYOCARDIUM};

use super::ThicknessError;

/// Role of a voxel in the thickness computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Label 0, or myocardium outside the kept component.
    Background,
    BloodPool,
    /// Myocardium touching background: held at potential 1.
    Epicardium,
    /// Myocardium touching blood pool: held at potential 0.
    Endocardium,
    /// Myocardium touching neither; potential is solved for.
    Interior,
}

impl Region {
    pub fn is_wall(&self) -> bool {
        matches!(self, Region::Epicardium | Region::Endocardium | Region::Interior)
    }
}

/// Partition of the myocardium into boundary and interior voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct Surfaces {
    dims: Dims,
    spacing: [f64; 3],
    regions: Vec<Region>,
    epi: Vec<usize>,
    endo: Vec<usize>,
    overlapping: Vec<usize>,
}

impl Surfaces {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    #[inline]
    pub fn region(&self, index: usize) -> Region {
        self.regions[index]
    }

    /// Epicardial voxel indices, ascending.
    pub fn epi_set(&self) -> &[usize] {
        &self.epi
    }

    /// Endocardial voxel indices, ascending.
    pub fn endo_set(&self) -> &[usize] {
        &self.endo
    }

    /// Voxels that touch both background and blood pool; they are counted as endocardium.
    pub fn overlapping(&self) -> &[usize] {
        &self.overlapping
    }

    pub fn domain_mask(&self) -> Mask {
        let data = self.regions.iter().map(|r| *r == Region::Interior).collect();
        Mask::new(self.dims, self.spacing, data).expect("valid geometry")
    }

    pub fn interior_count(&self) -> usize {
        self.regions.iter().filter(|r| **r == Region::Interior).count()
    }

    /// Fails when any voxel touches both background and blood pool.
    pub fn require_disjoint(&self) -> Result<&Self, ThicknessError> {
        if self.overlapping.is_empty() {
            Ok(self)
        } else {
            Err(ThicknessError::OverlappingBoundary(self.overlapping.len()))
        }
    }
}

/// Splits the largest 26-connected myocardium component into epicardial,
/// endocardial and interior voxels by their face neighbors.
///
/// Neighbors outside the grid are ignored, so a wall that runs into the
/// volume edge gets no boundary condition there.
pub fn classify_surfaces(labels: &LabelVolume) -> Result<Surfaces, ThicknessError> {
    let dims = labels.dims();
    let lvm = largest_component(&labels.mask_of(MYOCARDIUM), Connectivity::TwentySix)
        .map_err(|_| ThicknessError::NoMyocardium)?;

    let mut regions: Vec<Region> = (0..dims.len())
        .map(|i| match labels.get(i) {
            BLOOD_POOL => Region::BloodPool,
            MYOCARDIUM if lvm.get(i) => Region::Interior,
            _ => Region::Background,
        })
        .collect();

    let mut epi = Vec::new();
    let mut endo = Vec::new();
    let mut overlapping = Vec::new();
    let mut any_bg = false;
    let mut any_bp = false;
    for i in 0..dims.len() {
        if regions[i] != Region::Interior {
            continue;
        }
        let mut touches_bg = false;
        let mut touches_bp = false;
        for j in dims.neighbors(i, Connectivity::Six) {
            match regions[j] {
                Region::Background => touches_bg = true,
                Region::BloodPool => touches_bp = true,
                _ => {}
            }
        }
        any_bg |= touches_bg;
        any_bp |= touches_bp;
        if touches_bp {
            endo.push(i);
            if touches_bg {
                overlapping.push(i);
            }
        } else if touches_bg {
            epi.push(i);
        }
    }
    if !any_bg {
        return Err(ThicknessError::NoEpicardialSurface);
    }
    if !any_bp {
        return Err(ThicknessError::NoEndocardialSurface);
    }
    for &i in &epi {
        regions[i] = Region::Epicardium;
    }
    for &i in &endo {
        regions[i] = Region::Endocardium;
    }
    Ok(Surfaces { dims, spacing: labels.spacing(), regions, epi, endo, overlapping })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{make_shell, make_slab, voxel_center, ShellSpec};

    #[test]
    fn shell_surfaces_sit_at_the_radii() {
        let spec = ShellSpec::new(10.0, 15.0, 1.0);
        let labels = make_shell(&spec).unwrap();
        let s = classify_surfaces(&labels).unwrap();
        let c = spec.center_mm();
        let radius = |i: usize| {
            let p = voxel_center(s.dims(), s.spacing(), i);
            ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt()
        };
        assert!(!s.epi_set().is_empty() && !s.endo_set().is_empty());
        assert!(s.epi_set().iter().all(|&i| (14.0..15.0).contains(&radius(i))));
        assert!(s.endo_set().iter().all(|&i| (10.0..11.0).contains(&radius(i))));
        assert!(s.overlapping().is_empty());
        let lvm = labels.count(2);
        assert_eq!(s.epi_set().len() + s.endo_set().len() + s.interior_count(), lvm);
    }

    #[test]
    fn solid_ball_has_no_endocardium() {
        let spec = ShellSpec::new(0.5, 6.0, 1.0);
        let mut data = make_shell(&spec).unwrap().into_data();
        data.iter_mut().filter(|v| **v == 1).for_each(|v| *v = 2);
        let labels = LabelVolume::new(spec.dims(), [1.0; 3], data).unwrap();
        assert_eq!(classify_surfaces(&labels), Err(ThicknessError::NoEndocardialSurface));
    }

    #[test]
    fn no_myocardium_is_reported() {
        let labels = LabelVolume::background(Dims::new(3, 3, 3), [1.0; 3]).unwrap();
        assert_eq!(classify_surfaces(&labels), Err(ThicknessError::NoMyocardium));
    }

    #[test]
    fn slab_top_is_epi_bottom_is_endo() {
        let labels = make_slab(10.0, 1.0, 20.0).unwrap();
        let s = classify_surfaces(&labels).unwrap();
        let d = s.dims();
        assert_eq!(s.epi_set().len(), 400);
        assert_eq!(s.endo_set().len(), 400);
        assert!(s.epi_set().iter().all(|&i| d.coords(i).2 == 11));
        assert!(s.endo_set().iter().all(|&i| d.coords(i).2 == 2));
        assert_eq!(s.interior_count(), 8 * 400);
    }

    #[test]
    fn single_layer_slab_is_all_endocardium() {
        let labels = make_slab(1.0, 1.0, 6.0).unwrap();
        let s = classify_surfaces(&labels).unwrap();
        assert!(s.epi_set().is_empty());
        assert_eq!(s.endo_set().len(), 36);
        assert_eq!(s.overlapping().len(), 36);
        assert_eq!(s.interior_count(), 0);
        assert_eq!(s.require_disjoint(), Err(ThicknessError::OverlappingBoundary(36)));
    }

    #[test]
    fn stray_myocardium_is_ignored() {
        let mut labels = make_slab(4.0, 1.0, 8.0).unwrap().into_data();
        let d = Dims::new(8, 8, 8);
        labels[d.index(0, 0, 7)] = 2;
        let labels = LabelVolume::new(d, [1.0; 3], labels).unwrap();
        let s = classify_surfaces(&labels).unwrap();
        assert_eq!(s.region(d.index(0, 0, 7)), Region::Background);
        assert_eq!(s.epi_set().len(), 64);
    }
}
