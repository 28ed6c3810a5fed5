//! Plain-text and CSV summaries of correlation and Dice results.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{CorrelationReport, DiceReport};
use crate::thickness::{Phase, Statistic};

pub const TABLE_FILE: &str = "correlation_table.txt";
pub const CURVES_FILE: &str = "dice_curves.csv";
pub const DICE_SUMMARY_FILE: &str = "dice_summary.txt";
pub const CURVES_HEADER: &str = "n_train,condition,mean_dice,max_dice";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("NothingToEmit: no dice, correlation or curve input given")]
    NothingToEmit,
    #[error("DuplicateLabel: {0}")]
    DuplicateLabel(String),
    #[error("InvalidCurves: {0}")]
    InvalidCurves(String),
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
}

/// One point of a Dice-versus-training-size curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n_train: u32,
    pub condition: String,
    pub mean_dice: f64,
    pub max_dice: f64,
}

pub fn parse_curves(text: &str) -> Result<Vec<CurveRow>, ReportError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| ReportError::InvalidCurves(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CURVES_HEADER {
        return Err(ReportError::InvalidCurves(format!("expected header {CURVES_HEADER}")));
    }
    reader.deserialize().map(|row| row.map_err(|e| ReportError::InvalidCurves(e.to_string()))).collect()
}

/// Labeled inputs; each label names one condition such as a model variant.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub dice: Vec<(String, DiceReport)>,
    pub correlation: Vec<(String, CorrelationReport)>,
    pub curves: Vec<CurveRow>,
}

/// File name to file contents.
pub type ReportFiles = BTreeMap<String, String>;

/// Renders every report that has input: the correlation table, the curves
/// CSV and the Dice summary. Numbers carry 4 decimals.
pub fn emit_reports(inputs: &ReportInputs) -> Result<ReportFiles, ReportError> {
    if inputs.dice.is_empty() && inputs.correlation.is_empty() && inputs.curves.is_empty() {
        return Err(ReportError::NothingToEmit);
    }
    check_unique(inputs.dice.iter().map(|(l, _)| l))?;
    check_unique(inputs.correlation.iter().map(|(l, _)| l))?;
    let mut files = ReportFiles::new();
    if !inputs.correlation.is_empty() {
        files.insert(TABLE_FILE.into(), correlation_table(&inputs.correlation));
    }
    if !inputs.curves.is_empty() {
        files.insert(CURVES_FILE.into(), curves_csv(&inputs.curves));
    }
    if !inputs.dice.is_empty() {
        files.insert(DICE_SUMMARY_FILE.into(), dice_summary_text(&inputs.dice, &inputs.curves));
    }
    Ok(files)
}

pub fn write_reports(files: &ReportFiles, dir: &Path) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir)?;
    for (name, text) in files {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

/// Pretty JSON with object keys in sorted order.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut text = serde_json::to_string_pretty(&serde_json::to_value(value)?)?;
    text.push('\n');
    Ok(text)
}

fn check_unique<'a>(labels: impl Iterator<Item = &'a String>) -> Result<(), ReportError> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(ReportError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn phase_title(phase: Phase) -> &'static str {
    match phase {
        Phase::Ed => "End-Diastole",
        Phase::Es => "End-Systole",
    }
}

fn statistic_title(stat: Statistic) -> &'static str {
    match stat {
        Statistic::Median => "Median",
        Statistic::P95 => "95 percentile",
        Statistic::Max => "Max",
    }
}

fn correlation_table(columns: &[(String, CorrelationReport)]) -> String {
    let widths: Vec<usize> = columns.iter().map(|(l, _)| l.len().max(7)).collect();
    let mut out = String::from("LVM wall thickness, Pearson r\n");
    let _ = write!(out, "{:<14}{:<15}", "Phase", "Statistic");
    for ((label, _), w) in columns.iter().zip(&widths) {
        let _ = write!(out, "  {label:>w$}");
    }
    out.push('\n');
    for phase in Phase::ALL {
        for stat in Statistic::ALL {
            let _ = write!(out, "{:<14}{:<15}", phase_title(phase), statistic_title(stat));
            for ((_, report), w) in columns.iter().zip(&widths) {
                let _ = write!(out, "  {:>w$.4}", report.rows.get(phase).get(stat));
            }
            out.push('\n');
        }
    }
    out.push('n');
    for (label, report) in columns {
        let _ = write!(out, " {label}={}", report.n);
    }
    out.push('\n');
    out
}

fn curves_csv(rows: &[CurveRow]) -> String {
    let mut sorted: Vec<&CurveRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.condition.cmp(&b.condition).then(a.n_train.cmp(&b.n_train)));
    let mut out = format!("{CURVES_HEADER}\n");
    for r in sorted {
        let _ = writeln!(out, "{},{},{:.4},{:.4}", r.n_train, r.condition, r.mean_dice, r.max_dice);
    }
    out
}

/// Reference point for a condition: its curve row with the most training cases.
fn reference_point<'a>(curves: &'a [CurveRow], condition: &str) -> Option<&'a CurveRow> {
    curves.iter().filter(|r| r.condition == condition).max_by_key(|r| r.n_train)
}

fn dice_summary_text(dice: &[(String, DiceReport)], curves: &[CurveRow]) -> String {
    let w = dice.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(9);
    let mut out = format!(
        "{:<w$}  {:>5}  {:>9}  {:>9}  {:>9}  {:>9}\n",
        "condition", "cases", "mean", "max", "ref_mean", "ref_max"
    );
    for (label, report) in dice {
        let _ = write!(
            out,
            "{label:<w$}  {:>5}  {:>9.4}  {:>9.4}",
            report.per_case.len(),
            report.summary.mean,
            report.summary.max
        );
        match reference_point(curves, label) {
            Some(r) => {
                let _ = writeln!(out, "  {:>9.4}  {:>9.4}", r.mean_dice, r.max_dice);
            }
            None => {
                let _ = writeln!(out, "  {:>9}  {:>9}", "-", "-");
            }
        }
    }
    out
}
