//! Command-line front end: `gen`, `run`, `ablate` and `report` subcommands.
//!
//! Exit codes: 0 on success, 1 for configuration or runtime errors, 2 for
//! usage errors (unknown flags, missing arguments, bad flag values).

use super::config::ExperimentConfig;
use super::{report, run_ablation, run_active_loop, write_run_outputs, AblationAxis};
use crate::datagen::{gen_blobs, write_dataset, BlobConfig};
use crate::error::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "mada",
    version,
    about = "Multi-source active domain adaptation experiments on synthetic data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a multi-domain dataset CSV with a metadata sidecar.
    Gen {
        /// Dataset preset; `blobs3` is three rotated sources plus a target.
        #[arg(long, default_value = "blobs3")]
        preset: String,
        /// Optional experiment config supplying the seed.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for dataset.csv and dataset.csv.meta.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the multi-round active adaptation loop.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for report.md, rounds.csv, selection_log.csv
        /// and model.ckpt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every variant of one ablation axis and write a combined report.
    Ablate {
        /// Which factor to ablate.
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render report.md from the CSVs already in a run directory.
    Report {
        /// Directory holding rounds.csv, or ablation subdirectories.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Module,
    Strategy,
    Uncertainty,
}

impl From<AxisArg> for AblationAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Module => AblationAxis::Module,
            AxisArg::Strategy => AblationAxis::Strategy,
            AxisArg::Uncertainty => AblationAxis::Uncertainty,
        }
    }
}

fn load_config(config: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_gen(preset: &str, config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let cfg = load_config(config, seed)?;
    if preset != "blobs3" {
        return Err(Error::Config(format!(
            "unknown preset {preset:?}, available: blobs3"
        )));
    }
    let ds = gen_blobs(&BlobConfig::default_shift(cfg.seed))?;
    std::fs::create_dir_all(out)?;
    let path = out.join("dataset.csv");
    write_dataset(&ds, &path)?;
    let n = ds.all_samples().count();
    println!("wrote {} ({} samples, {} sources + target)", path.display(), n, ds.m);
    Ok(())
}

fn cmd_run(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<()> {
    let cfg = load_config(config, seed)?;
    let outcome = run_active_loop(&cfg)?;
    write_run_outputs(out, &outcome)?;
    for rep in &outcome.reports {
        let target = rep
            .target_acc()
            .map(|a| format!("{:.2}", 100.0 * a))
            .unwrap_or_else(|| "-".into());
        println!(
            "[{}] round {}: +{} labels, target {}%, mean {:.2}%",
            outcome.label,
            rep.round_label(),
            rep.selected.len(),
            target,
            100.0 * rep.mean_acc
        );
    }
    println!(
        "budget {} spent with {} oracle queries; outputs in {}",
        outcome.budget,
        outcome.oracle_queries,
        out.display()
    );
    Ok(())
}

fn cmd_ablate(
    axis: AxisArg,
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let cfg = load_config(config, seed)?;
    let outcomes = run_ablation(axis.into(), &cfg, out)?;
    for o in &outcomes {
        let last = o.reports.last().expect("non-empty reports");
        let target = last
            .target_acc()
            .map(|a| format!("{:.2}", 100.0 * a))
            .unwrap_or_else(|| "-".into());
        println!("[{}] final target {}%, mean {:.2}%", o.label, target, 100.0 * last.mean_acc);
    }
    println!("combined report in {}", out.join("report.md").display());
    Ok(())
}

fn cmd_report(out: &Path) -> Result<()> {
    let mut runs: Vec<(String, report::ParsedRun)> = Vec::new();
    let top = out.join("rounds.csv");
    if top.is_file() {
        let label = out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        runs.push((label, report::parse_rounds_csv(&std::fs::read_to_string(&top)?)?));
    } else {
        let mut subdirs: Vec<PathBuf> = std::fs::read_dir(out)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("rounds.csv").is_file())
            .collect();
        subdirs.sort();
        for dir in subdirs {
            let label = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            let csv = std::fs::read_to_string(dir.join("rounds.csv"))?;
            runs.push((label, report::parse_rounds_csv(&csv)?));
        }
    }
    if runs.is_empty() {
        return Err(Error::Config(format!(
            "no rounds.csv found in {} or its subdirectories",
            out.display()
        )));
    }
    // Re-rendered reports carry no timing; wall time is not in the CSVs.
    let md = report::render_report_md(&runs, None)?;
    report::write_text(&out.join("report.md"), &md)?;
    println!("re-rendered {}", out.join("report.md").display());
    Ok(())
}

/// Parses and executes one invocation; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Gen { preset, config, seed, out } => {
            cmd_gen(preset, config.as_deref(), *seed, out)
        }
        Command::Run { config, seed, out } => cmd_run(config.as_deref(), *seed, out),
        Command::Ablate { axis, config, seed, out } => {
            cmd_ablate(*axis, config.as_deref(), *seed, out)
        }
        Command::Report { out } => cmd_report(out),
    };
    match result {
        Ok(()) => 0,
        Err(Error::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}
