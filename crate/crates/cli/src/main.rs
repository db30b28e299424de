//! `mfmls`: config-driven runner for the moving least squares and kernel
//! studies.

mod commands;
mod config;
mod domain;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use commands::{Ctx, Report};
use config::{ExperimentConfig, Study};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Quasi-uniform point clouds, one CSV per cardinality.
    Sample,
    /// Max-error convergence table and fitted rates.
    Convergence,
    /// Lebesgue constants and per-point Lebesgue functions.
    Lebesgue,
    /// Max-error statistics under Gaussian data noise.
    Noise,
    /// Matérn power function fields and their decay rate.
    Power,
    /// Polynomial space dimensions against observed ranks.
    Info,
}

impl From<Command> for Study {
    fn from(c: Command) -> Self {
        match c {
            Command::Sample => Study::Sample,
            Command::Convergence => Study::Convergence,
            Command::Lebesgue => Study::Lebesgue,
            Command::Noise => Study::Noise,
            Command::Power => Study::Power,
            Command::Info => Study::Info,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mfmls",
    version,
    about = "Moving least squares on point clouds from algebraic surfaces"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, env = "MFMLS_THREADS")]
    threads: Option<usize>,
}

/// Exit code when the configuration or the run setup is invalid.
const EXIT_CONFIG: u8 = 2;
/// Exit code when outputs were written but some cells failed.
const EXIT_CELLS: u8 = 1;

fn write_outputs(dir: &Path, report: &Report, command: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, body) in &report.files {
        let path = dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    let manifest = dir.join("errors.json");
    if report.failures.is_empty() {
        if manifest.exists() {
            std::fs::remove_file(&manifest)?;
        }
    } else {
        let body = serde_json::json!({ "command": command, "failures": report.failures });
        std::fs::write(&manifest, serde_json::to_string_pretty(&body)? + "\n")
            .with_context(|| format!("writing {}", manifest.display()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Report> {
    let study = Study::from(cli.command);
    let cfg = ExperimentConfig::load(&cli.config)?;
    cfg.validate(study)?;
    if let Some(t) = cli.threads {
        anyhow::ensure!(t > 0, "threads must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let seed = cli.seed.unwrap_or(cfg.seed);
    let ctx = Ctx::new(cfg, seed)?;
    let report = commands::run(study, &ctx)?;
    let name = format!("{:?}", cli.command).to_lowercase();
    write_outputs(&dir, &report, &name)?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            println!("{}", report.summary);
            if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &report.failures {
                    eprintln!("failed {} (m={:?}, n={}): {}", f.stage, f.m, f.n, f.error);
                }
                ExitCode::from(EXIT_CELLS)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
