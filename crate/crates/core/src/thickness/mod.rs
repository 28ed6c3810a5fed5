//! Wall thickness from the Laplace potential between the epicardial and
//! endocardial surfaces.
//!
//! The potential is fixed at 1 on the epicardium and 0 on the endocardium and
//! relaxed in between by Jacobi sweeps. Thickness at an epicardial voxel is
//! the length of the streamline that descends the potential from there to the
//! blood pool.

mod laplace;
mod report;
mod stats;
mod streamline;
mod surfaces;

pub use laplace::{solve_laplace, PotentialField, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
pub use report::{write_streamlines_csv, ThicknessReport, STREAMLINE_CSV_HEADER};
pub use stats::{
    percentile, thickness_map, thickness_stats_pair, trace_all, Phase, PhaseStats, Statistic, ThicknessEntry,
    ThicknessMap, ThicknessStats,
};
pub use streamline::{max_steps, polyline_length, trace_streamline, Streamline, Termination};
pub use surfaces::{classify_surfaces, Region, Surfaces};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::volume::LabelVolume;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThicknessError {
    #[error("NoMyocardium: label volume has no myocardium (label 2) voxel")]
    NoMyocardium,
    #[error("NoEpicardialSurface: no myocardium voxel borders background")]
    NoEpicardialSurface,
    #[error("NoEndocardialSurface: no myocardium voxel borders the blood pool")]
    NoEndocardialSurface,
    #[error("OverlappingBoundary: {0} voxels border both background and blood pool")]
    OverlappingBoundary(usize),
    #[error("InvalidTolerance: {0}")]
    InvalidTolerance(f64),
    #[error("InvalidIterationLimit: max_iter must be >= 1")]
    InvalidIterationLimit,
    #[error("InvalidStep: step {0} mm must be finite and > 0")]
    InvalidStep(f64),
    #[error("NotAnEpicardialSeed: voxel {0} is not on the epicardium")]
    NotAnEpicardialSeed(usize),
    #[error("NoSeeds: the epicardial surface is empty")]
    NoSeeds,
    #[error("EmptyMap: no {0} streamline reached the blood pool")]
    EmptyMap(&'static str),
}

/// Solver and integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThicknessConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Euler step; `None` means a quarter of the smallest voxel spacing.
    pub step_mm: Option<f64>,
}

impl Default for ThicknessConfig {
    fn default() -> Self {
        ThicknessConfig { tol: DEFAULT_TOLERANCE, max_iter: DEFAULT_MAX_ITER, step_mm: None }
    }
}

impl ThicknessConfig {
    pub fn step_for(&self, spacing: [f64; 3]) -> f64 {
        self.step_mm.unwrap_or_else(|| 0.25 * spacing.iter().cloned().fold(f64::INFINITY, f64::min))
    }
}

/// Everything computed for one label volume.
#[derive(Debug, Clone)]
pub struct ThicknessRun {
    pub field: PotentialField,
    pub streamlines: Vec<Streamline>,
    pub map: ThicknessMap,
}

/// Classify, solve and trace in one go.
pub fn measure(labels: &LabelVolume, config: &ThicknessConfig) -> Result<ThicknessRun, ThicknessError> {
    let surfaces = classify_surfaces(labels)?;
    let field = solve_laplace(&surfaces, config.tol, config.max_iter)?;
    let streamlines = trace_all(&field, config.step_for(labels.spacing()))?;
    let map = ThicknessMap::from_streamlines(&streamlines);
    Ok(ThicknessRun { field, streamlines, map })
}

#[cfg(test)]
mod tests;
