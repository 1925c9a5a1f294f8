//! `steklov-lab`: reproduces the E(ε) curve, the tables and the derivative
//! checks. Exit code 0 when every row passes, 1 on a tolerance breach, 2 on a
//! configuration error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use steklov::experiments::{run_experiment, ExperimentConfig, ExperimentError, ExperimentId};

#[derive(Debug, Parser)]
#[command(name = "steklov-lab", version, about = "Steklov eigenvalue experiments on annular domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Angular resolution of the mesh.
    #[arg(long, global = true)]
    ntheta: Option<usize>,
    /// Radial resolution of the mesh.
    #[arg(long, global = true)]
    nr: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replaces every per-row tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Worker threads for table rows.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// key=value file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep of E(ε) with its maximum marked.
    Fig1,
    /// One of the tables 1 to 7.
    Table {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=7))]
        number: u8,
    },
    /// Shape derivatives against finite differences.
    FdCheck,
    /// Critical radius report.
    Eps0,
}

fn build_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let experiment = match cli.command {
        Command::Fig1 => ExperimentId::Fig1,
        Command::Table { number } => ExperimentId::Table(number),
        Command::FdCheck => ExperimentId::FdCheck,
        Command::Eps0 => ExperimentId::Eps0,
    };
    let mut config = ExperimentConfig::new(experiment);
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        config.apply_key_values(&text)?;
        // the subcommand decides what runs
        config.experiment = experiment;
    }
    if let Some(v) = cli.ntheta {
        config.n_theta = v;
    }
    if let Some(v) = cli.nr {
        config.n_r = v;
    }
    if let Some(v) = &cli.out {
        config.out_dir = v.clone();
    }
    if cli.tolerance.is_some() {
        config.tolerance = cli.tolerance;
    }
    if cli.jobs.is_some() {
        config.jobs = cli.jobs;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&config) {
        Ok(summary) => {
            for r in &summary.rows {
                let status = if r.passed { "PASS" } else { "FAIL" };
                let reference = r.reference.map(|p| format!(" reference={p}")).unwrap_or_default();
                let note = if r.note.is_empty() { String::new() } else { format!("  {}", r.note) };
                println!("{status} {} [{}] computed={:.6}{reference}{note}", r.experiment, r.domain, r.computed);
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(ExperimentError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
