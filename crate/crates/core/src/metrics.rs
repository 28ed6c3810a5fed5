//! Overlap and agreement statistics for evaluating segmentations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::thickness::{Phase, PhaseStats, Statistic};
use crate::volume::{LabelVolume, BLOOD_POOL, MYOCARDIUM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("InvalidLabel: Dice is defined for labels 1 and 2, got {0}")]
    InvalidLabel(u8),
    #[error("EmptyInput: no cases to summarize")]
    EmptyInput,
    #[error("LengthMismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("TooFewSamples: need at least 2, got {0}")]
    TooFewSamples(usize),
    #[error("ZeroVariance: {0} sequence is constant")]
    ZeroVariance(&'static str),
    #[error("CaseIdMismatch: {0}")]
    CaseIdMismatch(String),
}

/// `2|A∩B| / (|A| + |B|)` over the voxels carrying `label`; 1.0 when the
/// label is absent from both volumes.
pub fn dice(pred: &LabelVolume, gt: &LabelVolume, label: u8) -> Result<f64, MetricsError> {
    if label != BLOOD_POOL && label != MYOCARDIUM {
        return Err(MetricsError::InvalidLabel(label));
    }
    if pred.dims() != gt.dims() {
        return Err(MetricsError::DimensionMismatch(format!(
            "pred {:?} vs gt {:?}",
            pred.dims().as_array(),
            gt.dims().as_array()
        )));
    }
    let (mut a, mut b, mut both) = (0usize, 0usize, 0usize);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let (in_a, in_b) = (p == label, g == label);
        a += in_a as usize;
        b += in_b as usize;
        both += (in_a && in_b) as usize;
    }
    if a + b == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (a + b) as f64)
}

/// Per-label Dice of one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseDice {
    pub bp: f64,
    pub lvm: f64,
    /// Unweighted mean of `bp` and `lvm`.
    pub mean: f64,
}

pub fn dice_case(pred: &LabelVolume, gt: &LabelVolume) -> Result<CaseDice, MetricsError> {
    let bp = dice(pred, gt, BLOOD_POOL)?;
    let lvm = dice(pred, gt, MYOCARDIUM)?;
    Ok(CaseDice { bp, lvm, mean: 0.5 * (bp + lvm) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiceSummary {
    pub mean: f64,
    pub max: f64,
}

/// Mean and maximum of per-case mean Dice values.
pub fn dice_summary(case_means: &[f64]) -> Result<DiceSummary, MetricsError> {
    if case_means.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mean = case_means.iter().sum::<f64>() / case_means.len() as f64;
    let max = case_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(DiceSummary { mean, max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceCaseEntry {
    pub id: String,
    pub bp: f64,
    pub lvm: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiceReport {
    pub per_case: Vec<DiceCaseEntry>,
    pub summary: DiceSummary,
}

impl DiceReport {
    /// Builds the report with cases ordered by id.
    pub fn new(cases: impl IntoIterator<Item = (String, CaseDice)>) -> Result<Self, MetricsError> {
        let mut per_case: Vec<DiceCaseEntry> =
            cases.into_iter().map(|(id, d)| DiceCaseEntry { id, bp: d.bp, lvm: d.lvm, mean: d.mean }).collect();
        per_case.sort_by(|a, b| a.id.cmp(&b.id));
        let means: Vec<f64> = per_case.iter().map(|c| c.mean).collect();
        Ok(DiceReport { summary: dice_summary(&means)?, per_case })
    }
}

/// Sample Pearson correlation, clamped to [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricsError::TooFewSamples(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(MetricsError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(MetricsError::ZeroVariance("y"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlations of median, p95 and max for one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatCorrelations {
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl StatCorrelations {
    pub fn get(&self, stat: Statistic) -> f64 {
        match stat {
            Statistic::Median => self.median,
            Statistic::P95 => self.p95,
            Statistic::Max => self.max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRows {
    pub ed: StatCorrelations,
    pub es: StatCorrelations,
}

impl CorrelationRows {
    pub fn get(&self, phase: Phase) -> &StatCorrelations {
        match phase {
            Phase::Ed => &self.ed,
            Phase::Es => &self.es,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub rows: CorrelationRows,
}

/// Pearson r between predicted and reference thickness statistics across
/// cases, for every phase and statistic. Both maps must hold the same ids.
pub fn correlation_report(
    pred: &BTreeMap<String, PhaseStats>,
    gt: &BTreeMap<String, PhaseStats>,
) -> Result<CorrelationReport, MetricsError> {
    if let Some(id) = pred.keys().find(|k| !gt.contains_key(*k)) {
        return Err(MetricsError::CaseIdMismatch(format!("{id} has no reference statistics")));
    }
    if let Some(id) = gt.keys().find(|k| !pred.contains_key(*k)) {
        return Err(MetricsError::CaseIdMismatch(format!("{id} has no predicted statistics")));
    }
    if pred.len() < 2 {
        return Err(MetricsError::TooFewSamples(pred.len()));
    }
    let cell = |phase: Phase, stat: Statistic| -> Result<f64, MetricsError> {
        let x: Vec<f64> = pred.values().map(|s| s.get(phase).get(stat)).collect();
        let y: Vec<f64> = gt.values().map(|s| s.get(phase).get(stat)).collect();
        pearson(&x, &y)
    };
    let row = |phase: Phase| -> Result<StatCorrelations, MetricsError> {
        Ok(StatCorrelations {
            median: cell(phase, Statistic::Median)?,
            p95: cell(phase, Statistic::P95)?,
            max: cell(phase, Statistic::Max)?,
        })
    };
    Ok(CorrelationReport { n: pred.len(), rows: CorrelationRows { ed: row(Phase::Ed)?, es: row(Phase::Es)? } })
}
