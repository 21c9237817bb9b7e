use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use rgm::sampler::SamplerConfig;
use rgm::sim::{run_replicates, ErrorDist, ReplicateReport, SimDesign, XDist};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::io::write_json;
use crate::manifest::{write_manifest, Recorder, MANIFEST_FILE};
use crate::PriorArg;

pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum XDistArg {
    Normal,
    Uniform,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Fraction of off-diagonal network entries that are edges.
    #[arg(long, default_value_t = 0.5)]
    pub sparsity: f64,
    #[arg(long, default_value_t = 0.1)]
    pub variance_explained: f64,
    /// Magnitude of every network edge.
    #[arg(long, default_value_t = 0.1)]
    pub effect: f64,
    /// normal, laplace, or t<df> such as t3.
    #[arg(long, default_value = "normal")]
    pub error_dist: String,
    #[arg(long, default_value_t = 1)]
    pub ivs_per_trait: usize,
    #[arg(long, value_enum, default_value_t = XDistArg::Normal)]
    pub x_dist: XDistArg,
    /// Bounds for `--x-dist uniform`.
    #[arg(long, default_value_t = 0.0)]
    pub x_low: f64,
    #[arg(long, default_value_t = 5.0)]
    pub x_high: f64,
    /// Fixed instrument effect, overriding the variance-explained calibration.
    #[arg(long)]
    pub instrument_effect: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, value_enum, default_value_t = PriorArg::SpikeAndSlab)]
    pub prior: PriorArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub iter: usize,
    #[arg(long, default_value_t = 2_000)]
    pub burnin: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

pub fn parse_error_dist(s: &str) -> CliResult<ErrorDist> {
    let lower = s.trim().to_ascii_lowercase();
    match lower.as_str() {
        "normal" | "gaussian" => Ok(ErrorDist::Normal),
        "laplace" => Ok(ErrorDist::Laplace),
        _ => lower
            .strip_prefix('t')
            .and_then(|df| df.parse::<f64>().ok())
            .map(ErrorDist::StudentT)
            .ok_or_else(|| CliError::usage(anyhow!("unknown error distribution {s:?}; use normal, laplace or t<df>"))),
    }
}

fn error_dist_name(d: ErrorDist) -> String {
    match d {
        ErrorDist::Normal => "normal".into(),
        ErrorDist::Laplace => "laplace".into(),
        ErrorDist::StudentT(df) => format!("t{df}"),
    }
}

fn design(args: &SimulateArgs) -> CliResult<SimDesign> {
    let design = SimDesign {
        p: args.p,
        sparsity: args.sparsity,
        effect_magnitude: args.effect,
        n: args.n,
        variance_explained: args.variance_explained,
        error_dist: parse_error_dist(&args.error_dist)?,
        ivs_per_trait: args.ivs_per_trait,
        x_dist: match args.x_dist {
            XDistArg::Normal => XDist::StandardNormal,
            XDistArg::Uniform => XDist::Uniform { low: args.x_low, high: args.x_high },
        },
        instrument_effect: args.instrument_effect,
        seed: args.seed,
    };
    design.validate()?;
    Ok(design)
}

fn metrics_json(design: &SimDesign, report: &ReplicateReport, args: &SimulateArgs) -> serde_json::Value {
    let replicates: Vec<_> = report
        .replicates
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "seed": r.seed,
                "tpr": r.metrics.tpr,
                "fpr": r.metrics.fpr,
                "fdr": r.metrics.fdr,
                "mcc": r.metrics.mcc,
                "auc": r.metrics.auc,
                "mad": r.mad,
                "realized_variance_explained": r.realized_ve,
            })
        })
        .collect();
    json!({
        "design": {
            "p": design.p,
            "n": design.n,
            "sparsity": design.sparsity,
            "effect": design.effect_magnitude,
            "variance_explained": design.variance_explained,
            "instrument_effect": design.instrument_effect(),
            "error_dist": error_dist_name(design.error_dist),
            "ivs_per_trait": design.ivs_per_trait,
            "x_dist": args.x_dist,
            "prior": args.prior.name(),
            "iter": args.iter,
            "burnin": args.burnin,
            "seed": design.seed,
        },
        "reps": report.replicates.len(),
        "aggregate": {
            "tpr": report.mean.tpr,
            "fpr": report.mean.fpr,
            "fdr": report.mean.fdr,
            "mcc": report.mean.mcc,
            "auc": report.mean.auc,
            "mad": report.mean_mad,
            "realized_variance_explained": report.mean_realized_ve,
        },
        "replicates": replicates,
        "manifest": MANIFEST_FILE,
    })
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let recorder = Recorder::start();
    let design = design(args)?;
    let config = SamplerConfig {
        n_iter: args.iter,
        n_burnin: args.burnin,
        prior: args.prior.into(),
        seed: args.seed,
        ..SamplerConfig::default()
    };
    config.validate()?;
    if args.reps == 0 {
        return Err(CliError::usage(anyhow!("--reps must be at least 1")));
    }
    let report = run_replicates(&design, &config, args.reps)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(CliError::runtime)?;
    write_json(&args.out_dir.join(METRICS_FILE), &metrics_json(&design, &report, args))?;
    let runtimes: Vec<f64> = report.replicates.iter().map(|r| r.runtime_secs).collect();
    let timings = json!({
        "median_runtime_secs": report.median_runtime_secs,
        "replicate_runtime_secs": runtimes,
    });
    let manifest = recorder.finish(
        "simulate",
        args.seed,
        args,
        BTreeMap::new(),
        vec![METRICS_FILE.to_string()],
        Some(timings),
        Vec::new(),
    );
    write_manifest(&args.out_dir, &manifest)?;

    let m = &report.mean;
    println!(
        "{} replicates: TPR {:.3}  FPR {:.4}  FDR {:.4}  MCC {:.3}  AUC {}  MAD {:.4}",
        args.reps,
        m.tpr,
        m.fpr,
        m.fdr,
        m.mcc,
        m.auc.map_or("n/a".to_string(), |a| format!("{a:.3}")),
        report.mean_mad
    );
    println!("median runtime {:.3} s; results written to {}", report.median_runtime_secs, args.out_dir.display());
    Ok(())
}
