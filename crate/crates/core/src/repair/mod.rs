//! Label-map cleanup: hole filling, morphological closing and assembly of
//! sparse ED/ES phase series.

mod morphology;

pub use morphology::{close_with_radius, dilate, erode, squared_distance_to};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::volume::{
    flood_fill, Connectivity, Dims, LabelVolume, Mask, VoxelVolume, BACKGROUND, BLOOD_POOL, MYOCARDIUM,
};

pub const PHASE_COUNT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepairError {
    #[error("InvalidRadius: radius must be >= 1")]
    InvalidRadius,
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("PhaseIndexOutOfRange: phase {0} is outside 0..{PHASE_COUNT}")]
    PhaseIndexOutOfRange(usize),
    #[error("DuplicatePhaseIndex: ED and ES both at phase {0}")]
    DuplicatePhaseIndex(usize),
    #[error("PhaseCount: expected {PHASE_COUNT} images, got {0}")]
    PhaseCount(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairConfig {
    pub radius_voxels: u32,
    /// Background connectivity used when deciding what is a hole.
    pub connectivity: Connectivity,
}

impl Default for RepairConfig {
    fn default() -> Self {
        RepairConfig { radius_voxels: 5, connectivity: Connectivity::Six }
    }
}

impl RepairConfig {
    pub fn new(radius_voxels: u32, connectivity: Connectivity) -> Result<Self, RepairError> {
        if radius_voxels == 0 {
            return Err(RepairError::InvalidRadius);
        }
        Ok(RepairConfig { radius_voxels, connectivity })
    }
}

/// Turns background pockets that cannot reach the volume border into foreground.
pub fn fill_holes(mask: &Mask, connectivity: Connectivity) -> Mask {
    let dims = mask.dims();
    let border = (0..dims.len()).filter(|&i| dims.on_border(i));
    let outside = flood_fill(mask, border, |i| !mask.get(i), connectivity);
    let data = mask.data().iter().zip(&outside).map(|(&m, &o)| m || !o).collect();
    Mask::new(dims, mask.spacing(), data).expect("same geometry")
}

pub fn close(mask: &Mask, config: &RepairConfig) -> Mask {
    close_with_radius(mask, config.radius_voxels)
}

/// Repairs a label map.
///
/// 1. Holes in the blood pool (label 1) are filled.
/// 2. The union of labels 1 and 2 is closed with the configured ball; voxels
///    the closing adds become myocardium when a face neighbor is myocardium,
///    blood pool otherwise.
/// 3. On overlap blood pool wins over myocardium, which wins over background.
///
/// No input foreground voxel ever becomes background.
pub fn repair_labels(labels: &LabelVolume, config: &RepairConfig) -> LabelVolume {
    let dims = labels.dims();
    let blood = fill_holes(&labels.mask_of(BLOOD_POOL), config.connectivity);

    let mut out: Vec<u8> = (0..dims.len())
        .map(|i| {
            if blood.get(i) {
                BLOOD_POOL
            } else if labels.get(i) == MYOCARDIUM {
                MYOCARDIUM
            } else {
                BACKGROUND
            }
        })
        .collect();

    let union =
        Mask::new(dims, labels.spacing(), out.iter().map(|&v| v != BACKGROUND).collect()).expect("same geometry");
    let closed = close(&union, config);

    let added: Vec<usize> = (0..dims.len()).filter(|&i| closed.get(i) && !union.get(i)).collect();
    let new_labels: Vec<u8> = added
        .iter()
        .map(|&i| {
            let lvm_adjacent = dims.neighbors(i, Connectivity::Six).any(|j| out[j] == MYOCARDIUM);
            if lvm_adjacent {
                MYOCARDIUM
            } else {
                BLOOD_POOL
            }
        })
        .collect();
    for (i, l) in added.into_iter().zip(new_labels) {
        out[i] = l;
    }
    LabelVolume::new(dims, labels.spacing(), out).expect("labels stay in range")
}

/// A 20-phase image series with masks populated only at ED and ES.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    images: Vec<VoxelVolume>,
    masks: Vec<LabelVolume>,
    ed_index: usize,
    es_index: usize,
}

impl PhaseSeries {
    pub fn phase_count(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[VoxelVolume] {
        &self.images
    }

    pub fn masks(&self) -> &[LabelVolume] {
        &self.masks
    }

    pub fn ed_index(&self) -> usize {
        self.ed_index
    }

    pub fn es_index(&self) -> usize {
        self.es_index
    }

    pub fn ed_mask(&self) -> &LabelVolume {
        &self.masks[self.ed_index]
    }

    pub fn es_mask(&self) -> &LabelVolume {
        &self.masks[self.es_index]
    }
}

fn same_geometry(dims: Dims, spacing: [f64; 3], other_dims: Dims, other_spacing: [f64; 3]) -> bool {
    dims == other_dims && spacing == other_spacing
}

/// Pairs 20 phase images with sparse masks: ED and ES carry the given labels,
/// every other phase an all-background mask.
pub fn build_phase_series(
    images: Vec<VoxelVolume>,
    ed_mask: LabelVolume,
    es_mask: LabelVolume,
    ed_index: usize,
    es_index: usize,
) -> Result<PhaseSeries, RepairError> {
    if images.len() != PHASE_COUNT {
        return Err(RepairError::PhaseCount(images.len()));
    }
    for idx in [ed_index, es_index] {
        if idx >= PHASE_COUNT {
            return Err(RepairError::PhaseIndexOutOfRange(idx));
        }
    }
    if ed_index == es_index {
        return Err(RepairError::DuplicatePhaseIndex(ed_index));
    }
    let dims = images[0].dims();
    let spacing = images[0].spacing();
    if let Some(p) = images.iter().position(|im| !same_geometry(dims, spacing, im.dims(), im.spacing())) {
        return Err(RepairError::DimensionMismatch(format!("image at phase {p} differs from phase 0")));
    }
    for (name, m) in [("ED", &ed_mask), ("ES", &es_mask)] {
        if !same_geometry(dims, spacing, m.dims(), m.spacing()) {
            return Err(RepairError::DimensionMismatch(format!(
                "{name} mask {:?} does not match images {:?}",
                m.dims().as_array(),
                dims.as_array()
            )));
        }
    }

    let empty = LabelVolume::background(dims, spacing).expect("geometry validated");
    let mut masks = vec![empty; PHASE_COUNT];
    masks[ed_index] = ed_mask;
    masks[es_index] = es_mask;
    Ok(PhaseSeries { images, masks, ed_index, es_index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{label_components, Dtype};
    use proptest::prelude::*;

    fn cube(d: Dims, lo: usize, hi: usize) -> Mask {
        let mut m = Mask::empty(d, [1.0; 3]).unwrap();
        for z in lo..hi {
            for y in lo..hi {
                for x in lo..hi {
                    m.set(d.index(x, y, z), true);
                }
            }
        }
        m
    }

    #[test]
    fn interior_hole_is_filled() {
        let d = Dims::new(7, 7, 7);
        let full = cube(d, 1, 6);
        let mut holed = full.clone();
        holed.set(d.index(3, 3, 3), false);
        assert_eq!(fill_holes(&holed, Connectivity::Six), full);
        assert_eq!(fill_holes(&full, Connectivity::Six), full);
    }

    #[test]
    fn border_reachable_concavity_stays_open() {
        // A C-shape: block with a slot cut from x = 2..5 through to the y = 0 border.
        let d = Dims::new(7, 7, 3);
        let mut m = Mask::empty(d, [1.0; 3]).unwrap();
        for z in 0..3 {
            for y in 0..6 {
                for x in 0..7 {
                    let slot = (2..5).contains(&x) && y < 4;
                    m.set(d.index(x, y, z), !slot);
                }
            }
        }
        assert_eq!(fill_holes(&m, Connectivity::Six), m);
    }

    #[test]
    fn spherical_cavity_is_closed() {
        let d = Dims::new(32, 32, 32);
        let mut m = cube(d, 6, 26);
        for i in 0..d.len() {
            let (x, y, z) = d.coords(i);
            let r2 = (x as i64 - 16).pow(2) + (y as i64 - 16).pow(2) + (z as i64 - 16).pow(2);
            if r2 <= 9 {
                m.set(i, false);
            }
        }
        let closed = close(&m, &RepairConfig::default());
        assert_eq!(closed, cube(d, 6, 26));
    }

    #[test]
    fn radius_zero_is_rejected() {
        assert_eq!(RepairConfig::new(0, Connectivity::Six), Err(RepairError::InvalidRadius));
    }

    fn nested_shells(d: Dims, gap: bool) -> LabelVolume {
        let c = (d.nx as f64 - 1.0) / 2.0;
        let data = (0..d.len())
            .map(|i| {
                let (x, y, z) = d.coords(i);
                let r = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2)).sqrt();
                if r < 5.0 {
                    1
                } else if gap && r < 6.0 {
                    0
                } else if r < 9.0 {
                    2
                } else {
                    0
                }
            })
            .collect();
        LabelVolume::new(d, [1.0; 3], data).unwrap()
    }

    #[test]
    fn gap_ring_is_bridged() {
        let d = Dims::new(35, 35, 35);
        let labels = nested_shells(d, true);
        let fg = labels.mask_where(|v| v != 0);
        assert_eq!(label_components(&fg, Connectivity::Six).1.len(), 2);
        let repaired = repair_labels(&labels, &RepairConfig::default());
        let fg = repaired.mask_where(|v| v != 0);
        assert_eq!(label_components(&fg, Connectivity::Six).1.len(), 1);
        for i in 0..d.len() {
            if labels.get(i) != 0 {
                assert_ne!(repaired.get(i), 0);
            }
        }
    }

    #[test]
    fn clean_shells_are_unchanged() {
        let labels = nested_shells(Dims::new(35, 35, 35), false);
        assert_eq!(repair_labels(&labels, &RepairConfig::default()), labels);
    }

    #[test]
    fn blood_pool_hole_becomes_blood_pool() {
        let d = Dims::new(35, 35, 35);
        let clean = nested_shells(d, false);
        let mut data = clean.data().to_vec();
        data[d.index(17, 17, 17)] = 0;
        data[d.index(18, 17, 17)] = 0;
        let holed = LabelVolume::new(d, [1.0; 3], data).unwrap();
        assert_eq!(repair_labels(&holed, &RepairConfig::default()), clean);
    }

    fn images(d: Dims) -> Vec<VoxelVolume> {
        (0..PHASE_COUNT).map(|_| VoxelVolume::zeros(d, [1.0; 3], Dtype::I16).unwrap()).collect()
    }

    #[test]
    fn phase_series_has_two_labeled_phases() {
        let d = Dims::new(3, 3, 3);
        let mut m = vec![0; d.len()];
        m[4] = 2;
        let mask = LabelVolume::new(d, [1.0; 3], m).unwrap();
        let s = build_phase_series(images(d), mask.clone(), mask, 0, 8).unwrap();
        let nonzero: Vec<usize> =
            s.masks().iter().enumerate().filter(|(_, m)| !m.is_all_background()).map(|(i, _)| i).collect();
        assert_eq!(nonzero, vec![0, 8]);
        assert_eq!(s.phase_count(), 20);
    }

    #[test]
    fn phase_series_errors() {
        let d = Dims::new(3, 3, 3);
        let mask = LabelVolume::background(d, [1.0; 3]).unwrap();
        assert_eq!(
            build_phase_series(images(d), mask.clone(), mask.clone(), 3, 3),
            Err(RepairError::DuplicatePhaseIndex(3))
        );
        assert_eq!(
            build_phase_series(images(d), mask.clone(), mask.clone(), 0, 20),
            Err(RepairError::PhaseIndexOutOfRange(20))
        );
        let other = LabelVolume::background(Dims::new(3, 3, 4), [1.0; 3]).unwrap();
        assert!(matches!(build_phase_series(images(d), mask, other, 0, 8), Err(RepairError::DimensionMismatch(_))));
    }

    proptest! {
        #[test]
        fn fill_holes_idempotent_and_extensive(
            bits in proptest::collection::vec(prop::bool::weighted(0.6), 343),
        ) {
            let m = Mask::new(Dims::new(7, 7, 7), [1.0; 3], bits).unwrap();
            let f = fill_holes(&m, Connectivity::Six);
            prop_assert!(m.is_subset_of(&f));
            prop_assert_eq!(&fill_holes(&f, Connectivity::Six), &f);
            // Remaining background is exactly the border-reachable background.
            let d = m.dims();
            let reach = flood_fill(&m, (0..d.len()).filter(|&i| d.on_border(i)),
                                   |i| !m.get(i), Connectivity::Six);
            for (i, &reached) in reach.iter().enumerate() {
                prop_assert_eq!(!f.get(i), reached);
            }
        }

        #[test]
        fn repair_never_drops_foreground(
            labels in proptest::collection::vec(prop::sample::select(vec![0u8, 0, 1, 2]), 1000),
            r in 1u32..4,
        ) {
            let d = Dims::new(10, 10, 10);
            let lv = LabelVolume::new(d, [1.0; 3], labels).unwrap();
            let out = repair_labels(&lv, &RepairConfig::new(r, Connectivity::Six).unwrap());
            for i in 0..d.len() {
                prop_assert!(lv.get(i) == 0 || out.get(i) != 0);
            }
            let before = lv.data().iter().filter(|&&v| v != 0).count();
            let after = out.data().iter().filter(|&&v| v != 0).count();
            prop_assert!(after >= before);
        }
    }
}
