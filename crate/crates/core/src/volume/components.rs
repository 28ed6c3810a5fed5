use std::collections::VecDeque;

use super::{Connectivity, Mask, Result, VolumeError};

/// One connected component found by [`label_components`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    /// Smallest linear index belonging to the component.
    pub first_index: usize,
    pub size: usize,
}

/// Breadth-first flood fill over voxels where `passable` holds, starting from `seeds`.
///
/// Seeds that are not passable are ignored. Returns the reached set.
pub fn flood_fill(
    mask: &Mask,
    seeds: impl IntoIterator<Item = usize>,
    passable: impl Fn(usize) -> bool,
    connectivity: Connectivity,
) -> Vec<bool> {
    let dims = mask.dims();
    let mut reached = vec![false; dims.len()];
    let mut queue = VecDeque::new();
    for s in seeds {
        if !reached[s] && passable(s) {
            reached[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(i) = queue.pop_front() {
        for j in dims.neighbors(i, connectivity) {
            if !reached[j] && passable(j) {
                reached[j] = true;
                queue.push_back(j);
            }
        }
    }
    reached
}

/// Labels the foreground of `mask` into connected components.
///
/// Component ids are assigned in order of first appearance in a linear scan,
/// so `components[k].first_index` is increasing in `k`. Background voxels get
/// `u32::MAX`.
pub fn label_components(mask: &Mask, connectivity: Connectivity) -> (Vec<u32>, Vec<Component>) {
    let dims = mask.dims();
    let mut labels = vec![u32::MAX; dims.len()];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..dims.len() {
        if !mask.get(start) || labels[start] != u32::MAX {
            continue;
        }
        let id = components.len() as u32;
        labels[start] = id;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            for j in dims.neighbors(i, connectivity) {
                if mask.get(j) && labels[j] == u32::MAX {
                    labels[j] = id;
                    queue.push_back(j);
                }
            }
        }
        components.push(Component { first_index: start, size });
    }
    (labels, components)
}

/// Keeps only the largest connected component.
///
/// Ties go to the component whose first voxel has the smallest linear index.
pub fn largest_component(mask: &Mask, connectivity: Connectivity) -> Result<Mask> {
    let (labels, components) = label_components(mask, connectivity);
    let mut best: Option<(u32, usize)> = None;
    for (id, c) in components.iter().enumerate() {
        if best.is_none_or(|(_, size)| c.size > size) {
            best = Some((id as u32, c.size));
        }
    }
    let (keep, _) = best.ok_or(VolumeError::EmptyMask)?;
    let data = labels.iter().map(|&l| l == keep).collect();
    Mask::new(mask.dims(), mask.spacing(), data)
}
