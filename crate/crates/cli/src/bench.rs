use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use rgm::sim::{bench_grid, SimDesign};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::manifest::{write_manifest, Recorder};

pub const BENCH_FILE: &str = "bench.csv";

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Comma-separated numbers of traits.
    #[arg(long, value_delimiter = ',')]
    pub traits_list: Vec<usize>,
    /// Comma-separated numbers of instruments per trait.
    #[arg(long, value_delimiter = ',')]
    pub ivs_list: Vec<usize>,
    #[arg(long, default_value_t = 1_000)]
    pub iters: usize,
    /// Runs per grid cell.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let recorder = Recorder::start();
    let base = SimDesign { n: args.n, seed: args.seed, ..SimDesign::default() };
    let cells = bench_grid(&base, &args.traits_list, &args.ivs_list, args.iters, args.reps)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(CliError::runtime)?;
    let mut csv = String::from("p,ivs_per_trait,n_iter,reps,median_secs\n");
    for c in &cells {
        csv.push_str(&format!("{},{},{},{},{}\n", c.p, c.ivs_per_trait, c.n_iter, c.runtimes_secs.len(), c.median_secs));
    }
    let path = args.out_dir.join(BENCH_FILE);
    fs::File::create(&path)
        .and_then(|mut f| f.write_all(csv.as_bytes()))
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::runtime)?;

    let timings = json!(cells
        .iter()
        .map(|c| json!({ "p": c.p, "ivs_per_trait": c.ivs_per_trait, "runtimes_secs": c.runtimes_secs }))
        .collect::<Vec<_>>());
    let manifest = recorder.finish(
        "bench",
        args.seed,
        args,
        BTreeMap::new(),
        vec![BENCH_FILE.to_string()],
        Some(timings),
        Vec::new(),
    );
    write_manifest(&args.out_dir, &manifest)?;
    print!("{csv}");
    Ok(())
}
