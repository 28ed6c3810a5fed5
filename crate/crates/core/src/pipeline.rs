//! File-level helpers and the batch pipeline: repair, resample to an
//! isotropic grid, measure thickness, and compare predictions with ground
//! truth.
//!
//! Repair runs on the native grid, before resampling, so the closing radius
//! is counted in native voxels.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{correlation_report, dice_case, CaseDice, DiceReport};
use crate::repair::{repair_labels, RepairConfig};
use crate::report::to_canonical_json;
use crate::thickness::{measure, PhaseStats, ThicknessConfig, ThicknessMap, ThicknessReport};
use crate::volume::{read_volume, write_volume, LabelVolume, VoxelVolume};

pub fn read_volume_file(path: &Path) -> Result<VoxelVolume> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(read_volume(&bytes)?)
}

pub fn read_labels_file(path: &Path) -> Result<LabelVolume> {
    Ok(LabelVolume::try_from(read_volume_file(path)?)?)
}

pub fn write_volume_file(path: &Path, volume: &VoxelVolume) -> Result<()> {
    write_text_or_bytes(path, &write_volume(volume))
}

pub fn write_text_file(path: &Path, text: &str) -> Result<()> {
    write_text_or_bytes(path, text.as_bytes())
}

fn write_text_or_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = to_canonical_json(value).map_err(|e| Error::json(path, e))?;
    write_text_file(path, &text)
}

/// Per-phase statistics of a thickness report; both phases must be present.
pub fn phase_stats(report: &ThicknessReport) -> Option<PhaseStats> {
    Some(PhaseStats { ed: report.ed, es: report.es? })
}

/// Reads every `*.json` thickness report in `dir`, keyed by file stem.
pub fn read_stats_dir(dir: &Path) -> Result<BTreeMap<String, PhaseStats>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let report: ThicknessReport = read_json_file(&path)?;
        let stats = phase_stats(&report).ok_or_else(|| Error::json(&path, "missing ES statistics"))?;
        out.insert(id, stats);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub repair: RepairConfig,
    /// Isotropic spacing the repaired labels are resampled to.
    pub target_mm: f64,
    pub thickness: ThicknessConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { repair: RepairConfig::default(), target_mm: 1.0, thickness: ThicknessConfig::default() }
    }
}

/// One case of a manifest. Relative paths are resolved against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: String,
    pub gt_ed: PathBuf,
    #[serde(default)]
    pub gt_es: Option<PathBuf>,
    #[serde(default)]
    pub pred_ed: Option<PathBuf>,
    #[serde(default)]
    pub pred_es: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub cases: Vec<CaseSpec>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let mut manifest: Manifest = read_json_file(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for case in &mut manifest.cases {
            for p in [Some(&mut case.gt_ed), case.gt_es.as_mut(), case.pred_ed.as_mut(), case.pred_es.as_mut()]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cases.is_empty() {
            return Err(Error::Manifest("no cases".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for case in &self.cases {
            if case.id.is_empty() || case.id.contains(['/', '\\']) {
                return Err(Error::Manifest(format!("invalid case id {:?}", case.id)));
            }
            if !seen.insert(&case.id) {
                return Err(Error::Manifest(format!("duplicate case id {}", case.id)));
            }
            if case.pred_es.is_some() && case.gt_es.is_none() {
                return Err(Error::Manifest(format!("{}: pred_es without gt_es", case.id)));
            }
        }
        Ok(())
    }
}

/// Repaired, resampled labels and their thickness map.
pub fn process_labels(labels: &LabelVolume, config: &PipelineConfig) -> Result<(LabelVolume, ThicknessMap)> {
    let repaired = repair_labels(labels, &config.repair);
    let resampled = repaired.resample_isotropic(config.target_mm)?;
    let run = measure(&resampled, &config.thickness)?;
    Ok((resampled, run.map))
}

fn thickness_of(ed: &Path, es: Option<&PathBuf>, config: &PipelineConfig) -> Result<ThicknessReport> {
    let (_, ed_map) = process_labels(&read_labels_file(ed)?, config)?;
    let es_map = es.map(|p| Ok::<_, Error>(process_labels(&read_labels_file(p)?, config)?.1)).transpose()?;
    Ok(ThicknessReport::new(&ed_map, es_map.as_ref())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub id: String,
    pub gt: ThicknessReport,
    pub pred: Option<ThicknessReport>,
    /// Dice per phase, with ids `"{case}:ED"` and `"{case}:ES"`.
    pub dice: Vec<(String, CaseDice)>,
}

/// Dice is taken on the volumes as given, before repair.
pub fn run_case(case: &CaseSpec, config: &PipelineConfig) -> Result<CaseResult> {
    let gt = thickness_of(&case.gt_ed, case.gt_es.as_ref(), config)?;
    let pred = case.pred_ed.as_ref().map(|ed| thickness_of(ed, case.pred_es.as_ref(), config)).transpose()?;
    let mut dice = Vec::new();
    let pairs = [("ED", Some(&case.gt_ed), case.pred_ed.as_ref()), ("ES", case.gt_es.as_ref(), case.pred_es.as_ref())];
    for (phase, gt_path, pred_path) in pairs {
        if let (Some(g), Some(p)) = (gt_path, pred_path) {
            let d = dice_case(&read_labels_file(p)?, &read_labels_file(g)?)?;
            dice.push((format!("{}:{phase}", case.id), d));
        }
    }
    Ok(CaseResult { id: case.id.clone(), gt, pred, dice })
}

/// Output file contents keyed by path relative to the output directory.
pub type PipelineFiles = BTreeMap<PathBuf, String>;

/// Runs every case (in parallel) and assembles the output files:
/// `gt_stats/{id}.json`, `pred_stats/{id}.json`, `dice.json` when any case
/// has a prediction, and `correlation.json` when at least two cases have
/// predicted and reference statistics for both phases.
pub fn run_pipeline(manifest: &Manifest, config: &PipelineConfig) -> Result<PipelineFiles> {
    manifest.validate()?;
    let mut results: Vec<CaseResult> = manifest.cases.par_iter().map(|c| run_case(c, config)).collect::<Result<_>>()?;
    results.sort_by(|a, b| a.id.cmp(&b.id));

    let mut files = PipelineFiles::new();
    let mut pred_stats = BTreeMap::new();
    let mut gt_stats = BTreeMap::new();
    let mut dice = Vec::new();
    for r in &results {
        let path = PathBuf::from("gt_stats").join(format!("{}.json", r.id));
        files.insert(path.clone(), json(&path, &r.gt)?);
        if let Some(pred) = &r.pred {
            let path = PathBuf::from("pred_stats").join(format!("{}.json", r.id));
            files.insert(path.clone(), json(&path, pred)?);
            if let (Some(p), Some(g)) = (phase_stats(pred), phase_stats(&r.gt)) {
                pred_stats.insert(r.id.clone(), p);
                gt_stats.insert(r.id.clone(), g);
            }
        }
        dice.extend(r.dice.iter().cloned());
    }
    if !dice.is_empty() {
        let path = PathBuf::from("dice.json");
        files.insert(path.clone(), json(&path, &DiceReport::new(dice)?)?);
    }
    if pred_stats.len() >= 2 {
        let path = PathBuf::from("correlation.json");
        files.insert(path.clone(), json(&path, &correlation_report(&pred_stats, &gt_stats)?)?);
    }
    Ok(files)
}

fn json<T: Serialize>(path: &Path, value: &T) -> Result<String> {
    to_canonical_json(value).map_err(|e| Error::json(path, e))
}

pub fn write_pipeline_files(files: &PipelineFiles, out_dir: &Path) -> Result<()> {
    for (rel, text) in files {
        write_text_file(&out_dir.join(rel), text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{inject_defect, make_shell, DefectSpec, ShellSpec};

    struct Scratch(PathBuf);

    impl Scratch {
        fn new(name: &str) -> Self {
            let dir = std::env::temp_dir().join(format!("lvwall-pipeline-{name}-{}", std::process::id()));
            let _ = std::fs::remove_dir_all(&dir);
            std::fs::create_dir_all(&dir).unwrap();
            Scratch(dir)
        }

        fn put(&self, name: &str, labels: &LabelVolume) -> PathBuf {
            let p = self.0.join(name);
            write_volume_file(&p, &labels.to_volume()).unwrap();
            p
        }
    }

    impl Drop for Scratch {
        fn drop(&mut self) {
            let _ = std::fs::remove_dir_all(&self.0);
        }
    }

    fn shell(r_in: f64, r_out: f64) -> LabelVolume {
        make_shell(&ShellSpec::new(r_in, r_out, 1.0).with_margin(6.0)).unwrap()
    }

    #[test]
    fn identical_prediction_gives_perfect_agreement() {
        let dir = Scratch::new("ident");
        let mut cases = Vec::new();
        for (i, (r_in, r_out)) in [(5.0, 8.0), (6.0, 10.0), (4.0, 9.0)].into_iter().enumerate() {
            let ed = dir.put(&format!("ed{i}.vvol"), &shell(r_in, r_out));
            let es = dir.put(&format!("es{i}.vvol"), &shell(r_in - 1.0, r_out));
            cases.push(CaseSpec {
                id: format!("c{i}"),
                gt_ed: ed.clone(),
                gt_es: Some(es.clone()),
                pred_ed: Some(ed),
                pred_es: Some(es),
            });
        }
        let mut cases_rev = cases.clone();
        let files = run_pipeline(&Manifest { cases }, &PipelineConfig::default()).unwrap();
        let names: Vec<String> = files.keys().map(|p| p.display().to_string()).collect();
        assert!(names.contains(&"correlation.json".to_string()));
        assert!(names.contains(&"gt_stats/c2.json".to_string()));
        let corr: serde_json::Value = serde_json::from_str(&files[Path::new("correlation.json")]).unwrap();
        assert_eq!(corr["n"], 3);
        for phase in ["ed", "es"] {
            for stat in ["median", "p95", "max"] {
                assert!((corr["rows"][phase][stat].as_f64().unwrap() - 1.0).abs() < 1e-12);
            }
        }
        let dice: DiceReport = serde_json::from_str(&files[Path::new("dice.json")]).unwrap();
        assert_eq!(dice.per_case.len(), 6);
        assert_eq!(dice.per_case[0].id, "c0:ED");
        assert!(dice.per_case.iter().all(|c| c.mean == 1.0));

        // Case order in the manifest does not matter.
        cases_rev.reverse();
        assert_eq!(files, run_pipeline(&Manifest { cases: cases_rev }, &PipelineConfig::default()).unwrap());
    }

    #[test]
    fn defect_is_repaired_before_measuring() {
        // A closing ball clipped at the grid edge would add voxels, so keep
        // the shell well inside.
        let spec = ShellSpec::new(10.0, 15.0, 1.0).with_margin(12.0);
        let clean = make_shell(&spec).unwrap();
        let c = spec.center_mm();
        let holed = inject_defect(&clean, &DefectSpec::Hole { center_mm: c, radius_mm: 3.0 }).unwrap();
        assert_ne!(holed, clean);
        let (processed, map) = process_labels(&holed, &PipelineConfig::default()).unwrap();
        assert_eq!(processed, clean);
        assert!((map.stats().unwrap().median - 5.0).abs() <= 0.75);
    }

    #[test]
    fn manifest_paths_resolve_against_its_directory() {
        let dir = Scratch::new("manifest");
        dir.put("a.vvol", &shell(4.0, 7.0));
        let text = r#"{"cases":[{"id":"a","gt_ed":"a.vvol"}]}"#;
        std::fs::write(dir.0.join("m.json"), text).unwrap();
        let m = Manifest::load(&dir.0.join("m.json")).unwrap();
        assert_eq!(m.cases[0].gt_ed, dir.0.join("a.vvol"));
        let files = run_pipeline(&m, &PipelineConfig::default()).unwrap();
        assert_eq!(files.len(), 1);
        let report: ThicknessReport = serde_json::from_str(&files[Path::new("gt_stats/a.json")]).unwrap();
        assert_eq!(report.es, None);
    }

    #[test]
    fn manifest_errors() {
        let case = |id: &str| CaseSpec { id: id.into(), gt_ed: "x".into(), gt_es: None, pred_ed: None, pred_es: None };
        assert!(matches!(Manifest { cases: vec![] }.validate(), Err(Error::Manifest(_))));
        assert!(matches!(Manifest { cases: vec![case("a"), case("a")] }.validate(), Err(Error::Manifest(_))));
        assert!(matches!(Manifest { cases: vec![case("a/b")] }.validate(), Err(Error::Manifest(_))));
        let missing = run_pipeline(&Manifest { cases: vec![case("a")] }, &PipelineConfig::default()).unwrap_err();
        assert_eq!(missing.exit_code(), 3);
        assert!(missing.to_string().starts_with("Io: "));
    }
}
