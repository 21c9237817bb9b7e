use std::time::Instant;

use rayon::prelude::*;

use super::{classification_metrics, generate_dataset, generate_network, mean_absolute_deviation, Metrics, SimDesign};
use crate::error::{Error, Result};
use crate::rng::{replicate_seed, stream, DATA_STREAM};
use crate::sampler::{run_chain, ChainInput, Prior, SamplerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub index: usize,
    pub seed: u64,
    pub metrics: Metrics,
    pub mad: f64,
    pub realized_ve: f64,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateReport {
    pub replicates: Vec<ReplicateResult>,
    /// Means over replicates; `auc` averages the replicates where it is defined.
    pub mean: Metrics,
    pub mean_mad: f64,
    pub mean_realized_ve: f64,
    pub median_runtime_secs: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// One replicate: fresh network and data from `(seed, index)`, one chain.
pub fn run_replicate(design: &SimDesign, config: &SamplerConfig, index: usize) -> Result<ReplicateResult> {
    let seed = replicate_seed(design.seed, index as u64);
    let wrap = |e: Error| Error::Replicate { index, source: Box::new(e) };
    let mut rng = stream(seed, DATA_STREAM);
    let a = generate_network(design, &mut rng).map_err(wrap)?;
    let d = design.design_mask();
    let sim = generate_dataset(&a, &d, design, &mut rng).map_err(wrap)?;
    let cfg = SamplerConfig { seed, ..*config };
    let start = Instant::now();
    let out = run_chain(&ChainInput::Individual(sim.data), &d, &cfg).map_err(wrap)?;
    let runtime_secs = start.elapsed().as_secs_f64();
    let truth = a.map(|v| u8::from(v != 0.0));
    let (_, mut metrics) = classification_metrics(&truth, &out.z_a_est).map_err(wrap)?;
    metrics.auc = super::auc(&truth, &out.gamma_est).ok();
    Ok(ReplicateResult {
        index,
        seed,
        metrics,
        mad: mean_absolute_deviation(&out.a_est, &a),
        realized_ve: sim.realized_ve.mean(),
        runtime_secs,
    })
}

/// Runs `n_reps` independent replicates in parallel and aggregates them.
pub fn run_replicates(design: &SimDesign, config: &SamplerConfig, n_reps: usize) -> Result<ReplicateReport> {
    if n_reps == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    design.validate()?;
    config.validate()?;
    let replicates: Vec<ReplicateResult> = (0..n_reps)
        .into_par_iter()
        .map(|r| run_replicate(design, config, r))
        .collect::<Result<_>>()?;
    let n = n_reps as f64;
    let avg = |f: fn(&ReplicateResult) -> f64| replicates.iter().map(f).sum::<f64>() / n;
    let aucs: Vec<f64> = replicates.iter().filter_map(|r| r.metrics.auc).collect();
    let mean = Metrics {
        tpr: avg(|r| r.metrics.tpr),
        fpr: avg(|r| r.metrics.fpr),
        fdr: avg(|r| r.metrics.fdr),
        mcc: avg(|r| r.metrics.mcc),
        auc: (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64),
    };
    Ok(ReplicateReport {
        mean,
        mean_mad: avg(|r| r.mad),
        mean_realized_ve: avg(|r| r.realized_ve),
        median_runtime_secs: median(replicates.iter().map(|r| r.runtime_secs).collect()),
        replicates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub p: usize,
    pub ivs_per_trait: usize,
    pub n_iter: usize,
    pub runtimes_secs: Vec<f64>,
    pub median_secs: f64,
}

/// Median chain runtime over `reps` runs for each `(p, ivs)` grid cell.
/// Runs are sequential so timings do not compete for cores.
pub fn bench_grid(
    base: &SimDesign,
    traits: &[usize],
    ivs: &[usize],
    n_iter: usize,
    reps: usize,
) -> Result<Vec<BenchCell>> {
    if traits.is_empty() || ivs.is_empty() {
        return Err(Error::Config("benchmark grid is empty".into()));
    }
    if n_iter == 0 || reps == 0 {
        return Err(Error::Config("iterations and repetitions must be positive".into()));
    }
    let config = SamplerConfig {
        n_iter,
        n_burnin: n_iter / 5,
        prior: Prior::SpikeSlab,
        ..SamplerConfig::default()
    };
    let mut cells = Vec::with_capacity(traits.len() * ivs.len());
    for &p in traits {
        for &m in ivs {
            let design = SimDesign { p, ivs_per_trait: m, ..*base };
            let runtimes_secs = (0..reps)
                .map(|r| run_replicate(&design, &config, r).map(|res| res.runtime_secs))
                .collect::<Result<Vec<_>>>()?;
            cells.push(BenchCell {
                p,
                ivs_per_trait: m,
                n_iter,
                median_secs: median(runtimes_secs.clone()),
                runtimes_secs,
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn zero_replicates_rejected() {
        assert!(run_replicates(&SimDesign::default(), &SamplerConfig::default(), 0).is_err());
        assert!(bench_grid(&SimDesign::default(), &[], &[1], 10, 1).is_err());
        assert!(bench_grid(&SimDesign::default(), &[2], &[1], 0, 1).is_err());
    }

    #[test]
    fn easy_design_is_recovered() {
        let design = SimDesign {
            p: 3,
            n: 20_000,
            sparsity: 0.5,
            effect_magnitude: 0.3,
            instrument_effect: Some(1.0),
            seed: 17,
            ..SimDesign::default()
        };
        let config = SamplerConfig { n_iter: 1500, n_burnin: 500, ..SamplerConfig::default() };
        let a = run_replicates(&design, &config, 1).unwrap();
        assert_eq!(a.mean.tpr, 1.0);
        assert_eq!(a.mean.fpr, 0.0);
        let b = run_replicates(&design, &config, 1).unwrap();
        assert_eq!(a.replicates[0].metrics, b.replicates[0].metrics);
        assert_eq!(a.mean_mad, b.mean_mad);
    }
}
