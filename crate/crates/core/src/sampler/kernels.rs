//! Conditional distributions and Metropolis–Hastings ratios used by a sweep.

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{ATraces, BTraces, IncrementalCache, DEGENERATE_DENOMINATOR};
use crate::model::{log_likelihood_at, sse_row, HyperParams, Matrix, StructuralParams, SummaryStats};
use crate::rng::Rng;

use super::Prior;

/// Variance draws are kept inside this range.
pub const VARIANCE_FLOOR: f64 = 1e-12;
pub const VARIANCE_CEILING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    A,
    B,
}

/// Shape and rate of the inverse-gamma conditional of `σ_j`.
pub fn sigma_full_conditional(
    j: usize,
    stats: &SummaryStats,
    params: &StructuralParams,
    hyper: &HyperParams,
) -> (f64, f64) {
    let shape = hyper.a_sigma + stats.n as f64 / 2.0;
    let rate = hyper.b_sigma + sse_row(j, stats, params) / 2.0;
    (shape, rate)
}

/// `IG(shape, rate)` as `rate / Gamma(shape, 1)`, clamped to the variance range.
pub fn inverse_gamma(shape: f64, rate: f64, rng: &mut Rng) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0)
        .expect("inverse-gamma shape must be positive")
        .sample(rng);
    (rate / g).clamp(VARIANCE_FLOOR, VARIANCE_CEILING)
}

/// Two-stage update of a half-Cauchy local variance:
/// `ε ~ IG(1, 1 + 1/v)` then `v ~ IG(1, c²/(2s) + 1/ε)` with `s = 1` in the
/// slab and `s = ν` in the spike.
pub fn local_variance_full_conditional(
    coef: f64,
    current_var: f64,
    indicator: bool,
    nu: f64,
    rng: &mut Rng,
) -> f64 {
    let eps = inverse_gamma(1.0, 1.0 + 1.0 / current_var, rng);
    let scale = if indicator { 1.0 } else { nu };
    inverse_gamma(1.0, coef * coef / (2.0 * scale) + 1.0 / eps, rng)
}

/// Posterior probability that a coefficient belongs to the slab.
pub fn spike_slab_indicator_probability(coef: f64, var: f64, incl_prob: f64, nu: f64) -> f64 {
    if nu == 1.0 || incl_prob <= 0.0 || incl_prob >= 1.0 {
        return incl_prob.clamp(0.0, 1.0);
    }
    let c2 = coef * coef;
    let log_slab = -c2 / (2.0 * var) + incl_prob.ln();
    let log_spike = -c2 / (2.0 * nu * var) + (1.0 - incl_prob).ln() - 0.5 * nu.ln();
    1.0 / (1.0 + (log_spike - log_slab).exp())
}

/// Beta parameters for the inclusion-probability draw.
pub fn beta_indicator_conditional(indicator: bool, a_prior: f64, b_prior: f64) -> (f64, f64) {
    let z = if indicator { 1.0 } else { 0.0 };
    (z + a_prior, 1.0 - z + b_prior)
}

/// Result of evaluating a single-entry proposal without touching the cache.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EntryProposal {
    pub log_alpha: f64,
    /// Effective coefficient after the move (post-threshold).
    pub effective: f64,
    pub pending: Pending,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Pending {
    /// Effective coefficient unchanged; nothing to commit.
    None,
    A(ATraces),
    B(BTraces),
}

fn effective_value(prior: Prior, proposed: f64, threshold: f64) -> f64 {
    match prior {
        Prior::Threshold if proposed.abs() > threshold => proposed,
        Prior::Threshold => 0.0,
        Prior::SpikeSlab => proposed,
    }
}

pub(crate) fn evaluate_entry(
    target: Target,
    i: usize,
    j: usize,
    proposed: f64,
    params: &StructuralParams,
    stats: &SummaryStats,
    cache: &IncrementalCache,
    prior: Prior,
    hyper: &HyperParams,
) -> EntryProposal {
    let (current_eff, current_latent, threshold, var) = match target {
        Target::A => {
            let latent = match prior {
                Prior::Threshold => params.a_latent[(i, j)],
                Prior::SpikeSlab => params.a[(i, j)],
            };
            let var = match prior {
                Prior::SpikeSlab if params.gamma[(i, j)] == 0 => hyper.nu1 * params.tau[(i, j)],
                _ => params.tau[(i, j)],
            };
            (params.a[(i, j)], latent, params.t_a, var)
        }
        Target::B => {
            let latent = match prior {
                Prior::Threshold => params.b_latent[(i, j)],
                Prior::SpikeSlab => params.b[(i, j)],
            };
            let var = match prior {
                Prior::SpikeSlab if params.phi[(i, j)] == 0 => hyper.nu2 * params.eta[(i, j)],
                _ => params.eta[(i, j)],
            };
            (params.b[(i, j)], latent, params.t_b, var)
        }
    };
    let log_prior = -(proposed * proposed - current_latent * current_latent) / (2.0 * var);
    let effective = effective_value(prior, proposed, threshold);
    if effective == current_eff {
        return EntryProposal { log_alpha: log_prior, effective, pending: Pending::None };
    }
    let n = stats.n as f64;
    match target {
        Target::A => {
            let factor = cache.det_factor(i, j, current_eff, effective);
            if !(factor.abs() > DEGENERATE_DENOMINATOR) {
                return EntryProposal {
                    log_alpha: f64::NEG_INFINITY,
                    effective,
                    pending: Pending::None,
                };
            }
            let t = cache.trace_deltas_a(i, j, current_eff, effective, stats, params);
            let dll = n * factor.abs().ln() - 0.5 * (cache.exponent_after_a(&t) - cache.exponent());
            EntryProposal { log_alpha: dll + log_prior, effective, pending: Pending::A(t) }
        }
        Target::B => {
            let t = cache.trace_deltas_b(i, j, current_eff, effective, stats, params);
            let dll = -0.5 * (cache.exponent_after_b(&t) - cache.exponent());
            EntryProposal { log_alpha: dll + log_prior, effective, pending: Pending::B(t) }
        }
    }
}

/// Log acceptance ratio of a single-entry random-walk move. Under the
/// threshold prior `proposed` is the latent value; its effective entry is
/// `proposed·1(|proposed| > t)`.
pub fn mh_log_ratio_entry(
    target: Target,
    i: usize,
    j: usize,
    proposed: f64,
    params: &StructuralParams,
    stats: &SummaryStats,
    cache: &IncrementalCache,
    prior: Prior,
    hyper: &HyperParams,
) -> f64 {
    evaluate_entry(target, i, j, proposed, params, stats, cache, prior, hyper).log_alpha
}

/// `Φ((1 − μ)/sd) − Φ(−μ/sd)`, the mass of `N(μ, sd²)` on `(0, 1)`.
pub(crate) fn unit_interval_mass(mu: f64, sd: f64) -> f64 {
    normal_cdf((1.0 - mu) / sd) - normal_cdf(-mu / sd)
}

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Draws from `N(mu, sd²)` restricted to `(0, 1)` by rejection.
pub(crate) fn truncated_normal_unit(mu: f64, sd: f64, rng: &mut Rng) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let x = mu + sd * z;
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
}

/// Thresholds a latent matrix: entries with `|x| ≤ t` become zero.
pub fn threshold_matrix(latent: &Matrix, t: f64) -> Matrix {
    latent.map(|v| if v.abs() > t { v } else { 0.0 })
}

/// Log acceptance ratio of a threshold move. The whole latent matrix is
/// re-thresholded at `proposed_t` and the likelihood evaluated directly.
pub fn mh_log_ratio_threshold(
    target: Target,
    proposed_t: f64,
    params: &StructuralParams,
    stats: &SummaryStats,
    hyper: &HyperParams,
) -> Result<f64> {
    if !(proposed_t > 0.0 && proposed_t < 1.0) {
        return Err(Error::Domain(format!("proposed threshold {proposed_t} outside (0, 1)")));
    }
    let sd = hyper.threshold_prop_var.sqrt();
    let current_t = match target {
        Target::A => params.t_a,
        Target::B => params.t_b,
    };
    let correction = unit_interval_mass(current_t, sd).ln() - unit_interval_mass(proposed_t, sd).ln();
    let dll = match target {
        Target::A => {
            let a_star = threshold_matrix(&params.a_latent, proposed_t);
            if a_star == params.a {
                0.0
            } else {
                log_likelihood_at(stats, &a_star, &params.b, &params.sigma)
                    - log_likelihood_at(stats, &params.a, &params.b, &params.sigma)
            }
        }
        Target::B => {
            let b_star = threshold_matrix(&params.b_latent, proposed_t);
            if b_star == params.b {
                0.0
            } else {
                log_likelihood_at(stats, &params.a, &b_star, &params.sigma)
                    - log_likelihood_at(stats, &params.a, &params.b, &params.sigma)
            }
        }
    };
    Ok(dll + correction)
}

/// Accept with probability `min(1, exp(log_alpha))`.
pub(crate) fn accept(log_alpha: f64, rng: &mut Rng) -> bool {
    if log_alpha >= 0.0 {
        return true;
    }
    if log_alpha.is_nan() {
        return false;
    }
    let u: f64 = rng.random();
    u.ln() < log_alpha
}
