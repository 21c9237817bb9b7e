use std::path::PathBuf;

use clap::Args;
use rgm::sampler::network_motif;
use serde::Serialize;

use crate::error::CliResult;
use crate::io::{read_indicator, read_tensor};

#[derive(Debug, Args, Serialize)]
pub struct MotifArgs {
    /// Binary p × p motif.
    #[arg(long)]
    pub gamma: PathBuf,
    /// Posterior indicator samples from `fit` (`.bin` files are read as binary).
    #[arg(long)]
    pub gamma_pst: PathBuf,
}

pub fn run(args: &MotifArgs) -> CliResult<()> {
    let motif = read_indicator(&args.gamma)?;
    let tensor = read_tensor(&args.gamma_pst)?;
    let prob = network_motif(&motif, &tensor)?;
    println!("{prob:.6}");
    Ok(())
}
