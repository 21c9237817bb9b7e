//! `rgm`: fit reciprocal graphical models from files, score network motifs,
//! and run simulation studies and timing benchmarks.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! validation errors.

mod bench;
mod error;
mod fit;
mod io;
mod manifest;
mod motif;
mod simulate;

use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};
use rgm::sampler::Prior;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "RGM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rgm", version, about = "Bayesian reciprocal graphical models for Mendelian randomization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the sampler on individual-level or summary-level inputs.
    Fit(fit::FitArgs),
    /// Posterior probability that the network contains a motif.
    Motif(motif::MotifArgs),
    /// Replicated simulations with edge-recovery metrics.
    Simulate(simulate::SimulateArgs),
    /// Median runtimes over a grid of trait and instrument counts.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum PriorArg {
    #[value(name = "spike-and-slab", alias = "spike-slab")]
    #[serde(rename = "spike-and-slab")]
    SpikeAndSlab,
    #[value(name = "threshold")]
    #[serde(rename = "threshold")]
    Threshold,
}

impl PriorArg {
    pub fn name(self) -> &'static str {
        match self {
            Self::SpikeAndSlab => "spike-and-slab",
            Self::Threshold => "threshold",
        }
    }
}

impl From<PriorArg> for Prior {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::SpikeAndSlab => Prior::SpikeSlab,
            PriorArg::Threshold => Prior::Threshold,
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(anyhow!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(CliError::runtime)
}

fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Fit(args) => fit::run(args),
        Command::Motif(args) => motif::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Bench(args) => bench::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
