//! `rqoc`: robust pulse optimization campaigns from the command line.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{CampaignConfig, Format};

#[derive(Parser, Debug)]
#[command(name = "rqoc", version, about = "Robust optimal control of band-limited transmon pulses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML campaign configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides `run.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core (overrides `run.jobs`).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (overrides `run.out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relaxation time T1 in seconds for open-system evaluation.
    #[arg(long, global = true)]
    t1: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multistart optimization of one gate.
    Optimize,
    /// Fidelity of a pulse file over the amplitude-error range.
    Evaluate {
        /// Pulse CSV with columns t_ns,ex,ey.
        pulse: PathBuf,
    },
    /// Run one of the campaigns.
    Experiment {
        #[arg(value_enum)]
        name: Experiment,
    },
    /// Build and evaluate a reference pulse.
    Baseline {
        #[arg(value_enum)]
        kind: Baseline,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Experiment {
    SweepError,
    Heatmap,
    CompetingLoss,
    Perturb,
    Difficulty,
    Objectives,
    FreqRobust,
    RbSim,
    ApeSim,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Baseline {
    Drag,
    Bb1,
}

fn effective_config(cli: &Cli) -> rqoc::Result<CampaignConfig> {
    let mut cfg = CampaignConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.run.jobs = j;
    }
    if let Some(o) = &cli.out {
        cfg.run.out = o.clone();
    }
    if let Some(f) = cli.format {
        cfg.run.format = f;
    }
    if let Some(t1) = cli.t1 {
        if !(t1 > 0.0) {
            return Err(rqoc::Error::Config(format!("--t1 must be positive, got {t1}")));
        }
        cfg.evaluate.t1_us = Some(t1 * 1e6);
        cfg.experiment.rb.t1_us = Some(t1 * 1e6);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> rqoc::Result<()> {
    let cfg = effective_config(cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.jobs)
        .build_global()
        .map_err(|e| rqoc::Error::Config(format!("cannot start {} workers: {e}", cfg.run.jobs)))?;
    match &cli.command {
        Command::Optimize => commands::optimize(&cfg),
        Command::Evaluate { pulse } => commands::evaluate(&cfg, pulse),
        Command::Experiment { name } => commands::experiment(&cfg, *name),
        Command::Baseline { kind } => commands::baseline(&cfg, *kind),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                rqoc::Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
