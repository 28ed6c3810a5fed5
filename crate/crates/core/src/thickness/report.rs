use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::volume::Dims;

use super::stats::{ThicknessMap, ThicknessStats};
use super::streamline::Streamline;
use super::ThicknessError;

pub const STREAMLINE_CSV_HEADER: &str = "seed_x,seed_y,seed_z,point_index,px_mm,py_mm,pz_mm,termination";

/// Per-case thickness statistics as written to disk.
///
/// `es` is absent when only one phase was measured. `reached_fraction` pools
/// the seeds of every measured phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessReport {
    pub ed: ThicknessStats,
    pub es: Option<ThicknessStats>,
    pub reached_fraction: f64,
    pub units: String,
}

impl ThicknessReport {
    pub fn new(ed: &ThicknessMap, es: Option<&ThicknessMap>) -> Result<Self, ThicknessError> {
        let ed_stats = ed.stats().ok_or(ThicknessError::EmptyMap("ED"))?;
        let es_stats = es.map(|m| m.stats().ok_or(ThicknessError::EmptyMap("ES"))).transpose()?;
        let maps: Vec<&ThicknessMap> = std::iter::once(ed).chain(es).collect();
        let seeds: usize = maps.iter().map(|m| m.entries().len()).sum();
        let reached: usize = maps.iter().map(|m| m.reached_count()).sum();
        Ok(ThicknessReport {
            ed: ed_stats,
            es: es_stats,
            reached_fraction: if seeds == 0 { 0.0 } else { reached as f64 / seeds as f64 },
            units: "mm".to_string(),
        })
    }
}

/// Writes every streamline point as one CSV row, streamlines in seed order.
pub fn write_streamlines_csv<W: Write>(out: &mut W, dims: Dims, lines: &[Streamline]) -> io::Result<()> {
    writeln!(out, "{STREAMLINE_CSV_HEADER}")?;
    for line in lines {
        let (sx, sy, sz) = dims.coords(line.seed);
        for (k, p) in line.points.iter().enumerate() {
            writeln!(out, "{sx},{sy},{sz},{k},{:.6},{:.6},{:.6},{}", p[0], p[1], p[2], line.termination.as_str())?;
        }
    }
    Ok(())
}
