//! Incremental maintenance of `det(I − A)`, `(I − A)⁻¹` and the likelihood
//! trace terms under single-entry changes of `A` or `B`.
//!
//! A change `a_ij → a*_ij` is the rank-1 perturbation
//! `I − A* = (I − A) + (a_ij − a*_ij)·e_i e_jᵀ`, so the matrix determinant
//! lemma and Sherman–Morrison give the new determinant and inverse in `O(1)`
//! and `O(p²)`. Queries never mutate the cache; moves are committed explicitly
//! once accepted.
//!
//! With `Σ = diag(σ)` the quadratic part of the log-likelihood decomposes as
//!
//! ```text
//! n·tr(Syy Σ⁻¹) + T1 + T2 + T3 + T5 + T6
//!
//! T1 = −n·tr(Syy Aᵀ Σ⁻¹)          T4 =  2n·tr(Syx Bᵀ Σ⁻¹ A)
//! T2 = −n·tr(Syy Σ⁻¹ A)           T5 = −2n·tr(Syx Bᵀ Σ⁻¹ (I − A))
//! T3 =  n·tr(Syy Aᵀ Σ⁻¹ A)        T6 =  n·tr(Sxx Bᵀ Σ⁻¹ B)
//! ```
//!
//! `T4` is the `A`-dependent part of `T5`, so every `A` move shifts `T5` by
//! exactly the change in `T4`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{i_minus, Matrix, StructuralParams, SummaryStats, Vector};

/// Default number of committed `A` moves between exact recomputations.
pub const DEFAULT_RECOMPUTE_PERIOD: usize = 1000;

/// Sherman–Morrison denominators below this magnitude are rejected.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;

/// Candidate trace values after an `A` move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ATraces {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
}

/// Candidate trace values after a `B` move. `t4` is included because it
/// depends on `B` as well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BTraces {
    pub t4: f64,
    pub t5: f64,
    pub t6: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalCache {
    pub det_ia: f64,
    pub inv_ia: Matrix,
    pub trace1: f64,
    pub trace2: f64,
    pub trace3: f64,
    pub trace4: f64,
    pub trace5: f64,
    pub trace6: f64,
    pub recompute_period: usize,
    ia: Matrix,
    commits: usize,
    recomputed: bool,
    n: f64,
    syy_sigma: f64,
    log_sigma_sum: f64,
}

/// Builds a cache from scratch.
pub fn recompute_cache(
    stats: &SummaryStats,
    params: &StructuralParams,
    recompute_period: usize,
) -> Result<IncrementalCache> {
    IncrementalCache::new(stats, params, recompute_period)
}

impl IncrementalCache {
    pub fn new(stats: &SummaryStats, params: &StructuralParams, recompute_period: usize) -> Result<Self> {
        let ia = i_minus(&params.a);
        let (det_ia, inv_ia) = exact_det_inv(&ia)?;
        let mut cache = Self {
            det_ia,
            inv_ia,
            trace1: 0.0,
            trace2: 0.0,
            trace3: 0.0,
            trace4: 0.0,
            trace5: 0.0,
            trace6: 0.0,
            recompute_period: recompute_period.max(1),
            ia,
            commits: 0,
            recomputed: false,
            n: stats.n as f64,
            syy_sigma: 0.0,
            log_sigma_sum: 0.0,
        };
        cache.refresh_traces(stats, params);
        Ok(cache)
    }

    /// Recomputes all six traces and the `Σ`-dependent constants directly.
    /// Needed whenever `σ` changes.
    pub fn refresh_traces(&mut self, stats: &SummaryStats, params: &StructuralParams) {
        let [t1, t2, t3, t4, t5, t6] = direct_traces(stats, &params.a, &params.b, &params.sigma);
        self.trace1 = t1;
        self.trace2 = t2;
        self.trace3 = t3;
        self.trace4 = t4;
        self.trace5 = t5;
        self.trace6 = t6;
        self.syy_sigma = self.n
            * (0..stats.p())
                .map(|j| stats.syy[(j, j)] / params.sigma[j])
                .sum::<f64>();
        self.log_sigma_sum = params.sigma.iter().map(|s| s.ln()).sum();
    }

    /// Full recompute of determinant, inverse and traces.
    pub fn reset(&mut self, stats: &SummaryStats, params: &StructuralParams) -> Result<()> {
        let period = self.recompute_period;
        *self = Self::new(stats, params, period)?;
        Ok(())
    }

    /// `1 + (I − A)⁻¹_(j,i)·(a_old − a_new)`, the determinant ratio of the move.
    #[inline]
    pub fn det_factor(&self, i: usize, j: usize, a_old: f64, a_new: f64) -> f64 {
        1.0 + self.inv_ia[(j, i)] * (a_old - a_new)
    }

    /// `det(I − A*)` for the single-entry move; does not mutate the cache.
    pub fn det_rank1_update(&self, i: usize, j: usize, a_old: f64, a_new: f64) -> f64 {
        self.det_factor(i, j, a_old, a_new) * self.det_ia
    }

    /// Commits the move to the determinant and inverse. Every
    /// `recompute_period` commits both are rebuilt from `I − A` directly.
    pub fn inv_rank1_update(&mut self, i: usize, j: usize, a_old: f64, a_new: f64) -> Result<()> {
        if a_old == a_new {
            return Ok(());
        }
        let delta = a_old - a_new;
        let denominator = 1.0 + delta * self.inv_ia[(j, i)];
        if !(denominator.abs() > DEGENERATE_DENOMINATOR) {
            return Err(Error::DegenerateUpdate { i, j, denominator });
        }
        let p = self.inv_ia.nrows();
        let scale = delta / denominator;
        let col: Vec<f64> = (0..p).map(|r| self.inv_ia[(r, i)]).collect();
        let row: Vec<f64> = (0..p).map(|c| self.inv_ia[(j, c)]).collect();
        for c in 0..p {
            let rc = scale * row[c];
            if rc == 0.0 {
                continue;
            }
            for r in 0..p {
                self.inv_ia[(r, c)] -= col[r] * rc;
            }
        }
        self.det_ia *= denominator;
        self.ia[(i, j)] = -a_new;
        self.commits += 1;
        if self.commits % self.recompute_period == 0 {
            let (det, inv) = exact_det_inv(&self.ia)?;
            self.det_ia = det;
            self.inv_ia = inv;
            self.recomputed = true;
        }
        Ok(())
    }

    /// Number of committed `A` moves so far.
    pub fn commits(&self) -> usize {
        self.commits
    }

    /// True once after every scheduled exact recompute.
    pub fn take_recompute_flag(&mut self) -> bool {
        std::mem::replace(&mut self.recomputed, false)
    }

    /// Candidate `T1..T4` for the move `a_ij: a_old → a_new`. `params.a` must
    /// still hold the pre-move matrix.
    pub fn trace_deltas_a(
        &self,
        i: usize,
        j: usize,
        a_old: f64,
        a_new: f64,
        stats: &SummaryStats,
        params: &StructuralParams,
    ) -> ATraces {
        let d = a_new - a_old;
        if d == 0.0 {
            return ATraces { t1: self.trace1, t2: self.trace2, t3: self.trace3, t4: self.trace4 };
        }
        let p = stats.p();
        let k = stats.k();
        let n = self.n;
        let w = n * d / params.sigma[i];
        let a = &params.a;
        let syy = &stats.syy;
        // A_(i,.) Syy_(.,j) and Syy_(j,.) A*_(i,.)ᵀ
        let mut pre = 0.0;
        let mut post = 0.0;
        for m in 0..p {
            pre += a[(i, m)] * syy[(m, j)];
            let star = if m == j { a_new } else { a[(i, m)] };
            post += syy[(j, m)] * star;
        }
        let mut bsyx = 0.0;
        for l in 0..k {
            bsyx += params.b[(i, l)] * stats.syx[(j, l)];
        }
        ATraces {
            t1: self.trace1 - w * syy[(i, j)],
            t2: self.trace2 - w * syy[(j, i)],
            t3: self.trace3 + w * (pre + post),
            t4: self.trace4 + 2.0 * w * bsyx,
        }
    }

    /// Candidate `T4..T6` for the move `b_il: b_old → b_new`.
    pub fn trace_deltas_b(
        &self,
        i: usize,
        l: usize,
        b_old: f64,
        b_new: f64,
        stats: &SummaryStats,
        params: &StructuralParams,
    ) -> BTraces {
        let d = b_new - b_old;
        if d == 0.0 {
            return BTraces { t4: self.trace4, t5: self.trace5, t6: self.trace6 };
        }
        let p = stats.p();
        let k = stats.k();
        let w = self.n * d / params.sigma[i];
        let a = &params.a;
        let b = &params.b;
        let mut a_syx = 0.0;
        for m in 0..p {
            a_syx += a[(i, m)] * stats.syx[(m, l)];
        }
        let ia_syx = stats.syx[(i, l)] - a_syx;
        let mut pre = 0.0;
        let mut post = 0.0;
        for m in 0..k {
            pre += b[(i, m)] * stats.sxx[(m, l)];
            let star = if m == l { b_new } else { b[(i, m)] };
            post += stats.sxx[(l, m)] * star;
        }
        BTraces {
            t4: self.trace4 + 2.0 * w * a_syx,
            t5: self.trace5 - 2.0 * w * ia_syx,
            t6: self.trace6 + w * (pre + post),
        }
    }

    pub fn commit_a_traces(&mut self, t: ATraces) {
        self.trace5 += t.t4 - self.trace4;
        self.trace1 = t.t1;
        self.trace2 = t.t2;
        self.trace3 = t.t3;
        self.trace4 = t.t4;
    }

    pub fn commit_b_traces(&mut self, t: BTraces) {
        self.trace4 = t.t4;
        self.trace5 = t.t5;
        self.trace6 = t.t6;
    }

    /// Quadratic exponent reconstructed from the cached traces.
    pub fn exponent(&self) -> f64 {
        self.syy_sigma + self.trace1 + self.trace2 + self.trace3 + self.trace5 + self.trace6
    }

    /// Exponent after an `A` move with candidate traces `t` (T5 shifts with T4).
    pub fn exponent_after_a(&self, t: &ATraces) -> f64 {
        let t5 = self.trace5 + (t.t4 - self.trace4);
        self.syy_sigma + t.t1 + t.t2 + t.t3 + t5 + self.trace6
    }

    pub fn exponent_after_b(&self, t: &BTraces) -> f64 {
        self.syy_sigma + self.trace1 + self.trace2 + self.trace3 + t.t5 + t.t6
    }

    /// Log-likelihood implied by the cached quantities.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood_with(self.det_ia, self.exponent())
    }

    pub(crate) fn log_likelihood_with(&self, det: f64, exponent: f64) -> f64 {
        if !det.is_finite() || det.abs() < f64::MIN_POSITIVE {
            return f64::NEG_INFINITY;
        }
        let p = self.inv_ia.nrows() as f64;
        -0.5 * self.n * p * (2.0 * PI).ln() - 0.5 * self.n * self.log_sigma_sum
            + self.n * det.abs().ln()
            - 0.5 * exponent
    }
}

/// Determinant and inverse through one LU factorization.
pub fn exact_det_inv(m: &Matrix) -> Result<(f64, Matrix)> {
    let lu = m.clone().lu();
    let det = lu.determinant();
    if !det.is_finite() || det == 0.0 {
        return Err(Error::Singular);
    }
    let inv = lu.try_inverse().ok_or(Error::Singular)?;
    Ok((det, inv))
}

/// Direct evaluation of `T1..T6`.
pub fn direct_traces(stats: &SummaryStats, a: &Matrix, b: &Matrix, sigma: &Vector) -> [f64; 6] {
    let p = stats.p();
    let k = stats.k();
    let n = stats.n as f64;
    // syx_b[(m, r)] = (Syx B_rᵀ)_m = Σ_l Syx_ml B_rl
    let syx_b = &stats.syx * b.transpose();
    let (mut t1, mut t2, mut t3, mut t4, mut t5, mut t6) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for r in 0..p {
        let inv_s = 1.0 / sigma[r];
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut s3 = 0.0;
        let mut s4 = 0.0;
        for m in 0..p {
            let arm = a[(r, m)];
            s1 += stats.syy[(r, m)] * arm;
            s2 += stats.syy[(m, r)] * arm;
            s4 += arm * syx_b[(m, r)];
            if arm != 0.0 {
                let mut acc = 0.0;
                for q in 0..p {
                    acc += stats.syy[(m, q)] * a[(r, q)];
                }
                s3 += arm * acc;
            }
        }
        let mut s6 = 0.0;
        for l in 0..k {
            let brl = b[(r, l)];
            if brl == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for q in 0..k {
                acc += stats.sxx[(l, q)] * b[(r, q)];
            }
            s6 += brl * acc;
        }
        t1 -= n * s1 * inv_s;
        t2 -= n * s2 * inv_s;
        t3 += n * s3 * inv_s;
        t4 += 2.0 * n * s4 * inv_s;
        t5 -= 2.0 * n * (syx_b[(r, r)] - s4) * inv_s;
        t6 += n * s6 * inv_s;
    }
    [t1, t2, t3, t4, t5, t6]
}
