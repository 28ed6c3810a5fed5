use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lvwall::cohort::make_nested_cohorts;
use lvwall::metrics::{correlation_report, dice_case, CorrelationReport, DiceReport};
use lvwall::phantom::{inject_defect, make_shell, make_slab, DefectSpec, ShellSpec};
use lvwall::pipeline::{
    read_json_file, read_labels_file, read_stats_dir, read_volume_file, run_pipeline, write_json_file,
    write_pipeline_files, write_text_file, write_volume_file, Manifest, PipelineConfig,
};
use lvwall::repair::{repair_labels, RepairConfig};
use lvwall::report::{emit_reports, parse_curves, write_reports, ReportInputs};
use lvwall::thickness::{
    measure, write_streamlines_csv, ThicknessConfig, ThicknessReport, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE,
};
use lvwall::volume::{resample_isotropic, Connectivity, Interpolation, LabelVolume};
use lvwall::{Error, Result};

/// Cardiac label-volume repair, wall thickness and segmentation agreement.
#[derive(Parser)]
#[command(name = "lvwall", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fill blood-pool holes and close gaps between blood pool and myocardium.
    Repair {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        repair: RepairArgs,
    },
    /// Resample a volume to isotropic spacing.
    Resample {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        mm: f64,
        #[arg(long, value_enum, default_value_t = Mode::Nearest)]
        mode: Mode,
    },
    /// Laplace wall thickness of a label volume (and optionally its ES phase).
    Thickness {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        es_labels: Option<PathBuf>,
        #[arg(long)]
        stats_out: PathBuf,
        /// Streamline points of the first (ED) volume.
        #[arg(long)]
        streamlines_out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Per-label Dice of a prediction against ground truth.
    Dice {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "case")]
        id: String,
    },
    /// Pearson correlation of predicted and reference thickness statistics.
    Correlate {
        #[arg(long)]
        pred_stats: PathBuf,
        #[arg(long)]
        gt_stats: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic label volumes.
    #[command(subcommand)]
    Phantom(PhantomCommand),
    /// Nested training cohorts from a list of case ids.
    Cohorts {
        /// Text file with one case id per line.
        #[arg(long)]
        ids: PathBuf,
        #[arg(long, default_value_t = 5)]
        step: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlation table, Dice curve CSV and Dice summary.
    Report {
        /// LABEL=PATH of a Dice report; repeatable.
        #[arg(long, value_parser = labeled_path)]
        dice: Vec<(String, PathBuf)>,
        /// LABEL=PATH of a correlation report; repeatable, one table column each.
        #[arg(long, value_parser = labeled_path)]
        corr: Vec<(String, PathBuf)>,
        #[arg(long)]
        curves: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repair, resample, measure and compare every case of a manifest.
    Pipeline {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        mm: f64,
        #[command(flatten)]
        repair: RepairArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Subcommand)]
enum PhantomCommand {
    /// Spherical shell: blood pool inside r_in, myocardium up to r_out.
    Shell {
        #[arg(long)]
        r_in: f64,
        #[arg(long)]
        r_out: f64,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Flat myocardium layer over a blood-pool layer.
    Slab {
        #[arg(long)]
        thickness: f64,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
        #[arg(long, default_value_t = 20.0)]
        extent: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Punch a blood-pool hole or open a gap ring in an existing volume.
    Defect {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        kind: DefectKind,
        /// Hole center in mm, as x,y,z.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        center: Option<Vec<f64>>,
        #[arg(long)]
        radius: Option<f64>,
        /// Gap-ring thickness in voxels.
        #[arg(long, default_value_t = 1)]
        voxels: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Nearest,
    Trilinear,
}

#[derive(Clone, Copy, ValueEnum)]
enum DefectKind {
    Hole,
    GapRing,
}

#[derive(Args)]
struct RepairArgs {
    /// Closing radius in voxels.
    #[arg(long, default_value_t = 5)]
    radius: u32,
    /// Face (6) or full (26) neighborhood for hole filling.
    #[arg(long, default_value_t = 6)]
    connectivity: u32,
}

impl RepairArgs {
    fn config(&self) -> Result<RepairConfig> {
        let conn = Connectivity::try_from(self.connectivity)?;
        Ok(RepairConfig::new(self.radius, conn)?)
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Euler step in mm; defaults to a quarter of the smallest spacing.
    #[arg(long)]
    step_mm: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
}

impl SolverArgs {
    fn config(&self) -> ThicknessConfig {
        ThicknessConfig { tol: self.tol, max_iter: self.max_iter, step_mm: self.step_mm }
    }
}

fn labeled_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => Ok((label.to_string(), path.into())),
        _ => Err(format!("expected LABEL=PATH, got {s:?}")),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Repair { input, out, repair } => {
            let config = repair.config()?;
            let labels = read_labels_file(&input)?;
            write_volume_file(&out, &repair_labels(&labels, &config).into_volume())
        }
        Command::Resample { input, out, mm, mode } => {
            let vol = read_volume_file(&input)?;
            let interp = match mode {
                Mode::Nearest => Interpolation::Nearest,
                Mode::Trilinear => Interpolation::Trilinear,
            };
            write_volume_file(&out, &resample_isotropic(&vol, mm, interp)?)
        }
        Command::Thickness { labels, es_labels, stats_out, streamlines_out, solver } => {
            let config = solver.config();
            let ed = measure(&read_labels_file(&labels)?, &config)?;
            let es = es_labels.map(|p| Ok::<_, Error>(measure(&read_labels_file(&p)?, &config)?)).transpose()?;
            let report = ThicknessReport::new(&ed.map, es.as_ref().map(|r| &r.map))?;
            write_json_file(&stats_out, &report)?;
            if let Some(path) = streamlines_out {
                let mut buf = Vec::new();
                write_streamlines_csv(&mut buf, ed.field.dims(), &ed.streamlines).map_err(|e| Error::io(&path, e))?;
                write_text_file(&path, &String::from_utf8(buf).expect("ascii csv"))?;
            }
            Ok(())
        }
        Command::Dice { pred, gt, out, id } => {
            let d = dice_case(&read_labels_file(&pred)?, &read_labels_file(&gt)?)?;
            write_json_file(&out, &DiceReport::new([(id, d)])?)
        }
        Command::Correlate { pred_stats, gt_stats, out } => {
            let report = correlation_report(&read_stats_dir(&pred_stats)?, &read_stats_dir(&gt_stats)?)?;
            write_json_file(&out, &report)
        }
        Command::Phantom(cmd) => run_phantom(cmd),
        Command::Cohorts { ids, step, seed, out } => {
            let ids: Vec<String> = read_text(&ids)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect();
            write_json_file(&out, &make_nested_cohorts(&ids, step, seed)?)
        }
        Command::Report { dice, corr, curves, out } => {
            let mut inputs = ReportInputs::default();
            for (label, path) in dice {
                inputs.dice.push((label, read_json_file::<DiceReport>(&path)?));
            }
            for (label, path) in corr {
                inputs.correlation.push((label, read_json_file::<CorrelationReport>(&path)?));
            }
            if let Some(path) = curves {
                inputs.curves = parse_curves(&read_text(&path)?)?;
            }
            Ok(write_reports(&emit_reports(&inputs)?, &out)?)
        }
        Command::Pipeline { manifest, out, mm, repair, solver } => {
            let config = PipelineConfig { repair: repair.config()?, target_mm: mm, thickness: solver.config() };
            let files = run_pipeline(&Manifest::load(&manifest)?, &config)?;
            write_pipeline_files(&files, &out)
        }
    }
}

fn run_phantom(cmd: PhantomCommand) -> Result<()> {
    let (labels, out): (LabelVolume, PathBuf) = match cmd {
        PhantomCommand::Shell { r_in, r_out, spacing, margin, out } => {
            let mut spec = ShellSpec::new(r_in, r_out, spacing);
            if let Some(m) = margin {
                spec = spec.with_margin(m);
            }
            (make_shell(&spec)?, out)
        }
        PhantomCommand::Slab { thickness, spacing, extent, out } => (make_slab(thickness, spacing, extent)?, out),
        PhantomCommand::Defect { input, out, kind, center, radius, voxels } => {
            let labels = read_labels_file(&input)?;
            let defect = match kind {
                DefectKind::Hole => {
                    let c = center.unwrap_or_else(|| center_of(&labels));
                    let radius_mm = radius
                        .ok_or_else(|| lvwall::phantom::PhantomError::InvalidSpec("hole needs --radius".into()))?;
                    DefectSpec::Hole { center_mm: [c[0], c[1], c[2]], radius_mm }
                }
                DefectKind::GapRing => DefectSpec::GapRing { thickness_voxels: voxels },
            };
            (inject_defect(&labels, &defect)?, out)
        }
    };
    write_volume_file(&out, &labels.into_volume())
}

fn center_of(labels: &LabelVolume) -> Vec<f64> {
    let d = labels.dims().as_array();
    let s = labels.spacing();
    (0..3).map(|k| 0.5 * d[k] as f64 * s[k]).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
