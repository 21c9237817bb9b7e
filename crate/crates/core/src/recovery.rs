//! Reconstruction of `Syx` and `Syy` from marginal regression summaries.
//!
//! The input is, for every response `i` and instrument `j`, the no-intercept
//! slope `β̂_ij` of `Y_i` on `X_j` and its mean squared error `σ̂²_ij`, together
//! with `Sxx`. Cross-moments follow exactly from `Syx_ij = β̂_ij·Sxx_jj`. The
//! `Syy` diagonal follows from the residual identity, `A` from cofactors of the
//! column-selected `Beta`, `Σ` from the reduced-form residual variances and the
//! full `Syy = Beta·Sxx·Betaᵀ + (I − A)⁻¹ Σ (I − A)⁻ᵀ`, where the signal term
//! uses the joint slopes `Syx·Sxx⁻¹`.

use crate::error::{Error, Result};
use crate::model::{i_minus, validate_design, DesignMask, InputMode, Matrix, SummaryStats, Vector};

const SINGULAR_MINOR: f64 = 1e-12;
const MIN_RECOVERED_VARIANCE: f64 = 1e-8;
const MAX_RSQUARE: f64 = 1.0 - 1e-12;

/// Marginal regression summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSummary {
    /// `p × k` slopes.
    pub beta: Matrix,
    /// `p × k` mean squared errors.
    pub sigma_hat: Matrix,
    /// `k × k` instrument second moments.
    pub sxx: Matrix,
    pub n: usize,
}

impl RegressionSummary {
    pub fn new(beta: Matrix, sigma_hat: Matrix, sxx: Matrix, n: usize) -> Result<Self> {
        let (p, k) = beta.shape();
        if p == 0 || k == 0 {
            return Err(Error::Empty("beta".into()));
        }
        if sigma_hat.shape() != (p, k) {
            return Err(Error::Dimension(format!(
                "sigma_hat is {:?}, beta is {:?}",
                sigma_hat.shape(),
                (p, k)
            )));
        }
        if sxx.shape() != (k, k) {
            return Err(Error::Dimension(format!("sxx is {:?}, expected {k}×{k}", sxx.shape())));
        }
        if n == 0 {
            return Err(Error::Empty("n must be positive".into()));
        }
        if sigma_hat.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Domain("sigma_hat entries must be non-negative".into()));
        }
        Ok(Self { beta, sigma_hat, sxx, n })
    }

    /// Runs every marginal no-intercept regression on individual data.
    pub fn from_data(x: &Matrix, y: &Matrix) -> Result<Self> {
        let stats = crate::model::summarize(x, y)?;
        let (p, k) = stats.syx.shape();
        let mut beta = Matrix::zeros(p, k);
        let mut sigma_hat = Matrix::zeros(p, k);
        let nf = stats.n as f64;
        for j in 0..k {
            let sxx = stats.sxx[(j, j)];
            for i in 0..p {
                let b = if sxx > 0.0 { stats.syx[(i, j)] / sxx } else { 0.0 };
                beta[(i, j)] = b;
                let sse: f64 = (0..stats.n)
                    .map(|t| {
                        let r = y[(t, i)] - b * x[(t, j)];
                        r * r
                    })
                    .sum();
                sigma_hat[(i, j)] = sse / nf;
            }
        }
        Self::new(beta, sigma_hat, stats.sxx, stats.n)
    }

    pub fn p(&self) -> usize {
        self.beta.nrows()
    }

    pub fn k(&self) -> usize {
        self.beta.ncols()
    }
}

fn minor(m: &Matrix, skip_row: usize, skip_col: usize) -> Matrix {
    m.clone().remove_row(skip_row).remove_column(skip_col)
}

fn det(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        1.0
    } else {
        m.clone().lu().determinant()
    }
}

/// Recovers `A` from a square `Beta = (I − A)⁻¹·diag(b)` through
/// `a_ij = (−1)^(i−j+1)·det(Beta∖(row j, col i)) / det(Beta∖(row i, col i))`.
pub fn a_from_beta(beta_square: &Matrix) -> Result<Matrix> {
    let p = beta_square.nrows();
    if beta_square.ncols() != p {
        return Err(Error::Dimension(format!(
            "a_from_beta needs a square matrix, got {:?}",
            beta_square.shape()
        )));
    }
    let scale = beta_square.amax().max(f64::MIN_POSITIVE);
    let threshold = SINGULAR_MINOR * scale.powi(p as i32 - 1);
    let mut a = Matrix::zeros(p, p);
    for i in 0..p {
        let denom = det(&minor(beta_square, i, i));
        for j in 0..p {
            if i == j {
                continue;
            }
            if !(denom.abs() > threshold) {
                return Err(Error::Recovery {
                    stage: "a_from_beta",
                    reason: format!("singular denominator minor at ({i}, {j})"),
                });
            }
            let sign = if (i + j) % 2 == 0 { -1.0 } else { 1.0 };
            a[(i, j)] = sign * det(&minor(beta_square, j, i)) / denom;
        }
    }
    Ok(a)
}

/// Stacks, for each response, the beta column of its lowest-index exclusive
/// instrument.
pub fn select_beta_columns(beta: &Matrix, d: &DesignMask) -> Result<Matrix> {
    if beta.shape() != (d.p(), d.k()) {
        return Err(Error::Dimension(format!(
            "beta is {:?}, design is {:?}",
            beta.shape(),
            (d.p(), d.k())
        )));
    }
    let p = d.p();
    let mut out = Matrix::zeros(p, p);
    for r in 0..p {
        let col = *d.exclusive_instruments(r).first().ok_or_else(|| {
            Error::Design(format!("response {r} has no exclusive instrument"))
        })?;
        out.set_column(r, &beta.column(col));
    }
    Ok(out)
}

/// `Syx_ij = β̂_ij·Sxx_jj`.
pub fn syx_from_beta(summary: &RegressionSummary) -> Matrix {
    let mut syx = summary.beta.clone();
    for j in 0..summary.k() {
        let s = summary.sxx[(j, j)];
        syx.column_mut(j).scale_mut(s);
    }
    syx
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyyDiagonal {
    pub values: Vector,
    /// Largest spread across instruments of the per-instrument estimates.
    pub max_discrepancy: f64,
}

/// `Syy_ii = σ̂²_ij + 2β̂_ij·Syx_ij − β̂²_ij·Sxx_jj`, averaged over the
/// instruments allowed for `i`.
pub fn syy_diagonal(summary: &RegressionSummary, syx: &Matrix, d: &DesignMask) -> SyyDiagonal {
    let p = summary.p();
    let mut values = Vector::zeros(p);
    let mut max_discrepancy: f64 = 0.0;
    for i in 0..p {
        let est: Vec<f64> = d
            .instruments(i)
            .into_iter()
            .map(|j| {
                let b = summary.beta[(i, j)];
                summary.sigma_hat[(i, j)] + 2.0 * b * syx[(i, j)] - b * b * summary.sxx[(j, j)]
            })
            .collect();
        if est.is_empty() {
            continue;
        }
        values[i] = est.iter().sum::<f64>() / est.len() as f64;
        let lo = est.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = est.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max_discrepancy = max_discrepancy.max(hi - lo);
    }
    SyyDiagonal { values, max_discrepancy }
}

/// `R² = 1 − det(R)/cof₁₁(R)` for a correlation matrix with the response in
/// position 0.
pub fn rsquare_from_corr(r: &Matrix) -> Result<f64> {
    if r.nrows() != r.ncols() || r.nrows() < 2 {
        return Err(Error::Dimension(format!("correlation matrix is {:?}", r.shape())));
    }
    let cof = det(&minor(r, 0, 0));
    if !(cof > SINGULAR_MINOR) {
        return Err(Error::Recovery {
            stage: "rsquare_from_corr",
            reason: format!("collinear instruments (cofactor {cof:.3e})"),
        });
    }
    let r2 = 1.0 - det(r) / cof;
    Ok(r2.clamp(0.0, MAX_RSQUARE))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaRecovery {
    pub sigma2: Vector,
    /// Set when some solution was negative and got clamped.
    pub clamped: bool,
}

/// Solves `[M_ij²]·σ² = mean_sq_resid`.
pub fn sigma_from_residuals(m_inv: &Matrix, mean_sq_resid: &Vector) -> Result<SigmaRecovery> {
    let sq = m_inv.map(|v| v * v);
    let sol = sq.lu().solve(mean_sq_resid).ok_or(Error::Recovery {
        stage: "sigma_from_residuals",
        reason: "squared-entry matrix is singular".into(),
    })?;
    let mut clamped = false;
    let sigma2 = sol.map(|v| {
        if v < MIN_RECOVERED_VARIANCE || !v.is_finite() {
            clamped = true;
            MIN_RECOVERED_VARIANCE
        } else {
            v
        }
    });
    Ok(SigmaRecovery { sigma2, clamped })
}

/// Everything produced while rebuilding the sufficient statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub syy: Matrix,
    pub syx: Matrix,
    pub a: Matrix,
    pub sigma2: Vector,
    pub diagonal_discrepancy: f64,
    pub warnings: Vec<String>,
}

impl Reconstruction {
    pub fn into_stats(self, sxx: Matrix, n: usize) -> Result<SummaryStats> {
        SummaryStats::new(self.syy, self.syx, sxx, n)
    }
}

fn correlation_for(i: usize, syy_ii: f64, syx: &Matrix, sxx: &Matrix, cols: &[usize]) -> Matrix {
    let m = cols.len();
    let mut r = Matrix::identity(m + 1, m + 1);
    let sy = syy_ii.sqrt();
    for (a, &ca) in cols.iter().enumerate() {
        let sa = sxx[(ca, ca)].sqrt();
        let v = syx[(i, ca)] / (sy * sa);
        r[(0, a + 1)] = v;
        r[(a + 1, 0)] = v;
        for (b, &cb) in cols.iter().enumerate().skip(a + 1) {
            let w = sxx[(ca, cb)] / (sa * sxx[(cb, cb)].sqrt());
            r[(a + 1, b + 1)] = w;
            r[(b + 1, a + 1)] = w;
        }
    }
    r
}

/// Full pipeline from regression summaries to `(Syy, Syx)`.
///
/// The per-response `R²` regresses on every instrument with positive variance,
/// since the reduced-form residual of `Y_i` must exclude the instruments of
/// all responses that feed into it.
pub fn syy_reconstruct(summary: &RegressionSummary, d: &DesignMask) -> Result<Reconstruction> {
    if d.p() != summary.p() || d.k() != summary.k() {
        return Err(Error::Dimension(format!(
            "design is {:?}, summary is {:?}",
            (d.p(), d.k()),
            (summary.p(), summary.k())
        )));
    }
    validate_design(d, InputMode::BetaSummary).into_result()?;
    let p = summary.p();
    let mut warnings = Vec::new();

    let syx = syx_from_beta(summary);
    let diag = syy_diagonal(summary, &syx, d);
    let beta_new = select_beta_columns(&summary.beta, d)?;
    let a = a_from_beta(&beta_new)?;

    let cols: Vec<usize> = (0..summary.k()).filter(|&j| summary.sxx[(j, j)] > 0.0).collect();
    let mut msr = Vector::zeros(p);
    for i in 0..p {
        let syy_ii = diag.values[i];
        if !(syy_ii > 0.0) {
            return Err(Error::Recovery {
                stage: "syy_diagonal",
                reason: format!("non-positive Syy diagonal for response {i}"),
            });
        }
        let r = correlation_for(i, syy_ii, &syx, &summary.sxx, &cols);
        let r2 = rsquare_from_corr(&r)?;
        msr[i] = (1.0 - r2) * syy_ii;
    }

    let ia = i_minus(&a);
    let m_inv = ia.try_inverse().ok_or(Error::Recovery {
        stage: "a_from_beta",
        reason: "recovered I − A is singular".into(),
    })?;
    let sig = sigma_from_residuals(&m_inv, &msr)?;
    if sig.clamped {
        warnings.push("negative recovered error variance clamped to 1e-8".to_string());
    }

    let sigma_term = &m_inv * Matrix::from_diagonal(&sig.sigma2) * m_inv.transpose();
    // Joint coefficients Syx·Sxx⁻¹ make the signal term the projection of Y
    // on X; they equal the marginal slopes when Sxx is diagonal.
    let signal = match summary.sxx.clone().cholesky() {
        Some(chol) => &syx * chol.solve(&syx.transpose()),
        None => {
            warnings.push("Sxx is not positive definite; using marginal slopes in Syy".to_string());
            &summary.beta * &summary.sxx * summary.beta.transpose()
        }
    };
    let mut syy = signal + sigma_term;
    syy = (&syy + syy.transpose()) * 0.5;
    Ok(Reconstruction {
        syy,
        syx,
        a,
        sigma2: sig.sigma2,
        diagonal_discrepancy: diag.max_discrepancy,
        warnings,
    })
}
