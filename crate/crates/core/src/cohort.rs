//! Nested training cohorts of growing size.
//!
//! The ids are shuffled once and every group is a prefix of the shuffled
//! order, so each group contains all smaller ones. The shuffle is fully
//! specified so that a plan can be reproduced in any language:
//!
//! * generator: SplitMix64 seeded with `seed`, each draw advancing the state
//!   by `0x9E3779B97F4A7C15` and mixing with the standard finalizer;
//! * shuffle: Fisher-Yates from the last position down to 1, swapping
//!   position `i` with `j` uniform in `0..=i`;
//! * uniform draw below `bound`: reject raw outputs below
//!   `(2^64 - bound) mod bound`, then take the output modulo `bound`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CohortError {
    #[error("NotDivisible: {len} case ids cannot be split into groups of {step}")]
    NotDivisible { len: usize, step: usize },
    #[error("InvalidStep: step must be positive")]
    InvalidStep,
    #[error("EmptyIds: no case ids given")]
    EmptyIds,
    #[error("DuplicateId: {0}")]
    DuplicateId(String),
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Unbiased draw from `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortPlan {
    /// Ids in input order.
    pub case_ids: Vec<String>,
    /// Groups of size `step`, `2 * step`, ..., each a prefix of one shuffle.
    pub groups: Vec<Vec<String>>,
    pub seed: u64,
}

impl CohortPlan {
    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn is_nested(&self) -> bool {
        self.groups.windows(2).all(|w| {
            let outer: HashSet<&String> = w[1].iter().collect();
            w[0].iter().all(|id| outer.contains(id))
        })
    }
}

pub fn make_nested_cohorts(case_ids: &[String], step: usize, seed: u64) -> Result<CohortPlan, CohortError> {
    if step == 0 {
        return Err(CohortError::InvalidStep);
    }
    if case_ids.is_empty() {
        return Err(CohortError::EmptyIds);
    }
    if !case_ids.len().is_multiple_of(step) {
        return Err(CohortError::NotDivisible { len: case_ids.len(), step });
    }
    let mut seen = HashSet::new();
    if let Some(dup) = case_ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(CohortError::DuplicateId(dup.clone()));
    }
    let mut order = case_ids.to_vec();
    SplitMix64::new(seed).shuffle(&mut order);
    let groups = (1..=case_ids.len() / step).map(|k| order[..k * step].to_vec()).collect();
    Ok(CohortPlan { case_ids: case_ids.to_vec(), groups, seed })
}
