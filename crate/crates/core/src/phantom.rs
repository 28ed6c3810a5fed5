//! Analytic label phantoms: concentric spherical shells, flat slabs, and
//! hole / gap defects resembling the errors found in contour-derived masks.
//!
//! Voxels are labeled by where their center falls; there is no anti-aliasing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::volume::{Connectivity, Dims, LabelVolume, BACKGROUND, BLOOD_POOL, MYOCARDIUM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhantomError {
    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),
    #[error("DefectOutsideVolume: center {0:?} mm lies outside the volume")]
    DefectOutsideVolume([f64; 3]),
}

fn positive(name: &str, v: f64) -> Result<(), PhantomError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(PhantomError::InvalidSpec(format!("{name} must be finite and > 0, got {v}")))
    }
}

/// Blood-pool sphere of radius `r_in_mm` wrapped in a myocardium shell out to `r_out_mm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    pub r_in_mm: f64,
    pub r_out_mm: f64,
    pub spacing_mm: f64,
    /// Background padding between the outer sphere and the volume faces.
    pub margin_mm: f64,
}

impl ShellSpec {
    /// Shell with the smallest permitted margin of two voxels.
    pub fn new(r_in_mm: f64, r_out_mm: f64, spacing_mm: f64) -> Self {
        ShellSpec { r_in_mm, r_out_mm, spacing_mm, margin_mm: 2.0 * spacing_mm }
    }

    pub fn with_margin(mut self, margin_mm: f64) -> Self {
        self.margin_mm = margin_mm;
        self
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        positive("r_in_mm", self.r_in_mm)?;
        positive("r_out_mm", self.r_out_mm)?;
        positive("spacing_mm", self.spacing_mm)?;
        if self.r_in_mm >= self.r_out_mm {
            return Err(PhantomError::InvalidSpec(format!(
                "r_in_mm ({}) must be below r_out_mm ({})",
                self.r_in_mm, self.r_out_mm
            )));
        }
        if !self.margin_mm.is_finite() || self.margin_mm < 2.0 * self.spacing_mm {
            return Err(PhantomError::InvalidSpec(format!(
                "margin_mm ({}) must be at least two voxels ({})",
                self.margin_mm,
                2.0 * self.spacing_mm
            )));
        }
        Ok(())
    }

    /// Voxels per axis: enough to hold `2 * (r_out + margin)`.
    pub fn dims(&self) -> Dims {
        let n = (2.0 * (self.r_out_mm + self.margin_mm) / self.spacing_mm - 1e-9).ceil() as usize;
        Dims::new(n, n, n)
    }

    /// Physical midpoint of the grid; may fall between voxel centers.
    pub fn center_mm(&self) -> [f64; 3] {
        let half = self.dims().nx as f64 * self.spacing_mm / 2.0;
        [half; 3]
    }
}

/// Physical center of voxel `index`.
pub fn voxel_center(dims: Dims, spacing: [f64; 3], index: usize) -> [f64; 3] {
    let (x, y, z) = dims.coords(index);
    [(x as f64 + 0.5) * spacing[0], (y as f64 + 0.5) * spacing[1], (z as f64 + 0.5) * spacing[2]]
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn make_shell(spec: &ShellSpec) -> Result<LabelVolume, PhantomError> {
    spec.validate()?;
    let dims = spec.dims();
    let spacing = [spec.spacing_mm; 3];
    let center = spec.center_mm();
    let data = (0..dims.len())
        .map(|i| {
            let d = distance(voxel_center(dims, spacing, i), center);
            if d < spec.r_in_mm {
                BLOOD_POOL
            } else if d < spec.r_out_mm {
                MYOCARDIUM
            } else {
                BACKGROUND
            }
        })
        .collect();
    Ok(LabelVolume::new(dims, spacing, data).expect("valid geometry"))
}

/// Voxel layers of padding below and above a slab.
pub const SLAB_PADDING_VOXELS: usize = 2;

/// Flat myocardium slab.
///
/// In slab coordinates, label 2 fills `0 <= z < thickness_mm`, blood pool
/// lies below (`z < 0`) and background above. The slab spans the whole
/// lateral extent of the grid, so its only surfaces are the top and bottom
/// faces. Slab `z = 0` sits at grid height `SLAB_PADDING_VOXELS * spacing_mm`.
pub fn make_slab(thickness_mm: f64, spacing_mm: f64, extent_mm: f64) -> Result<LabelVolume, PhantomError> {
    positive("thickness_mm", thickness_mm)?;
    positive("spacing_mm", spacing_mm)?;
    positive("extent_mm", extent_mm)?;
    let layers = (thickness_mm / spacing_mm - 0.5).ceil();
    if layers < 1.0 {
        return Err(PhantomError::InvalidSpec(format!(
            "slab of {thickness_mm} mm contains no voxel center at spacing {spacing_mm} mm"
        )));
    }
    let lateral = ((extent_mm / spacing_mm).round() as usize).max(1);
    let nz = 2 * SLAB_PADDING_VOXELS + layers as usize;
    let dims = Dims::new(lateral, lateral, nz);
    let data = (0..dims.len())
        .map(|i| {
            let (_, _, k) = dims.coords(i);
            let z = (k as f64 - SLAB_PADDING_VOXELS as f64 + 0.5) * spacing_mm;
            if z < 0.0 {
                BLOOD_POOL
            } else if z < thickness_mm {
                MYOCARDIUM
            } else {
                BACKGROUND
            }
        })
        .collect();
    Ok(LabelVolume::new(dims, [spacing_mm; 3], data).expect("valid geometry"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefectSpec {
    /// Clears blood-pool voxels whose centers lie within `radius_mm` of `center_mm`.
    Hole { center_mm: [f64; 3], radius_mm: f64 },
    /// Clears the innermost `thickness_voxels` myocardium layers facing the blood pool.
    GapRing { thickness_voxels: u32 },
}

pub fn inject_defect(labels: &LabelVolume, defect: &DefectSpec) -> Result<LabelVolume, PhantomError> {
    let dims = labels.dims();
    let spacing = labels.spacing();
    let mut out = labels.data().to_vec();
    match *defect {
        DefectSpec::Hole { center_mm, radius_mm } => {
            positive("radius_mm", radius_mm)?;
            let extent = [dims.nx as f64 * spacing[0], dims.ny as f64 * spacing[1], dims.nz as f64 * spacing[2]];
            if (0..3).any(|a| !(center_mm[a] >= 0.0 && center_mm[a] < extent[a])) {
                return Err(PhantomError::DefectOutsideVolume(center_mm));
            }
            for (i, v) in out.iter_mut().enumerate() {
                if *v == BLOOD_POOL && distance(voxel_center(dims, spacing, i), center_mm) <= radius_mm {
                    *v = BACKGROUND;
                }
            }
        }
        DefectSpec::GapRing { thickness_voxels } => {
            if thickness_voxels == 0 {
                return Err(PhantomError::InvalidSpec("gap ring thickness must be >= 1".into()));
            }
            // Peel one layer per pass, each layer facing the blood pool or the previous layer.
            let mut removed = vec![false; dims.len()];
            for pass in 0..thickness_voxels {
                let layer: Vec<usize> = (0..dims.len())
                    .filter(|&i| out[i] == MYOCARDIUM)
                    .filter(|&i| {
                        dims.neighbors(i, Connectivity::Six).any(|j| {
                            if pass == 0 {
                                out[j] == BLOOD_POOL
                            } else {
                                removed[j]
                            }
                        })
                    })
                    .collect();
                removed.iter_mut().for_each(|r| *r = false);
                for i in layer {
                    out[i] = BACKGROUND;
                    removed[i] = true;
                }
            }
        }
    }
    Ok(LabelVolume::new(dims, spacing, out).expect("labels stay in range"))
}
