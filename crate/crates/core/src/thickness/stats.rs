use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::laplace::PotentialField;
use super::streamline::{trace_streamline, Streamline, Termination};
use super::ThicknessError;

/// Linear-interpolated percentile of ascending `sorted` data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let f = rank - lo as f64;
    Some(sorted[lo] + f * (sorted[hi] - sorted[lo]))
}

/// Median, 95th percentile and maximum wall thickness in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThicknessStats {
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl ThicknessStats {
    pub fn from_lengths(lengths: &[f64]) -> Option<Self> {
        let mut sorted: Vec<f64> = lengths.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(ThicknessStats {
            median: percentile(&sorted, 0.5)?,
            p95: percentile(&sorted, 0.95)?,
            max: *sorted.last()?,
        })
    }

    pub fn get(&self, stat: Statistic) -> f64 {
        match stat {
            Statistic::Median => self.median,
            Statistic::P95 => self.p95,
            Statistic::Max => self.max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistic {
    Median,
    P95,
    Max,
}

impl Statistic {
    pub const ALL: [Statistic; 3] = [Statistic::Median, Statistic::P95, Statistic::Max];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThicknessEntry {
    pub seed: usize,
    pub length_mm: f64,
    pub termination: Termination,
}

/// Per-seed streamline lengths with summary statistics over streamlines that
/// reached the blood pool.
#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessMap {
    entries: Vec<ThicknessEntry>,
    stats: Option<ThicknessStats>,
    reached_fraction: f64,
}

impl ThicknessMap {
    pub fn from_streamlines(lines: &[Streamline]) -> Self {
        let mut entries: Vec<ThicknessEntry> = lines
            .iter()
            .map(|l| ThicknessEntry { seed: l.seed, length_mm: l.length_mm, termination: l.termination })
            .collect();
        entries.sort_by_key(|e| e.seed);
        let reached: Vec<f64> =
            entries.iter().filter(|e| e.termination == Termination::ReachedEndo).map(|e| e.length_mm).collect();
        let reached_fraction = if entries.is_empty() { 0.0 } else { reached.len() as f64 / entries.len() as f64 };
        ThicknessMap { stats: ThicknessStats::from_lengths(&reached), entries, reached_fraction }
    }

    /// Entries sorted by seed index.
    pub fn entries(&self) -> &[ThicknessEntry] {
        &self.entries
    }

    /// `None` when no streamline reached the blood pool.
    pub fn stats(&self) -> Option<ThicknessStats> {
        self.stats
    }

    pub fn reached_fraction(&self) -> f64 {
        self.reached_fraction
    }

    pub fn reached_count(&self) -> usize {
        self.entries.iter().filter(|e| e.termination == Termination::ReachedEndo).count()
    }
}

/// One streamline per epicardial voxel, in seed order.
pub fn trace_all(field: &PotentialField, step_mm: f64) -> Result<Vec<Streamline>, ThicknessError> {
    if field.epi_set().is_empty() {
        return Err(ThicknessError::NoSeeds);
    }
    field.epi_set().par_iter().map(|&seed| trace_streamline(field, seed, step_mm)).collect()
}

pub fn thickness_map(field: &PotentialField, step_mm: f64) -> Result<ThicknessMap, ThicknessError> {
    Ok(ThicknessMap::from_streamlines(&trace_all(field, step_mm)?))
}

/// End-diastole and end-systole statistics of one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub ed: ThicknessStats,
    pub es: ThicknessStats,
}

impl PhaseStats {
    pub fn get(&self, phase: Phase) -> &ThicknessStats {
        match phase {
            Phase::Ed => &self.ed,
            Phase::Es => &self.es,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Ed,
    Es,
}

impl Phase {
    pub const ALL: [Phase; 2] = [Phase::Ed, Phase::Es];

    pub fn name(&self) -> &'static str {
        match self {
            Phase::Ed => "ED",
            Phase::Es => "ES",
        }
    }
}

pub fn thickness_stats_pair(ed: &ThicknessMap, es: &ThicknessMap) -> Result<PhaseStats, ThicknessError> {
    Ok(PhaseStats {
        ed: ed.stats().ok_or(ThicknessError::EmptyMap(Phase::Ed.name()))?,
        es: es.stats().ok_or(ThicknessError::EmptyMap(Phase::Es.name()))?,
    })
}
