//! Core data model for the reciprocal structural equation `Y = AY + BX + E`.
//!
//! Responses are indexed by `0..p`, instruments by `0..k`. `Σ` is diagonal and
//! stored as a vector of variances. Every likelihood evaluation works from the
//! sufficient statistics `Syy = YᵀY/n`, `Syx = YᵀX/n`, `Sxx = XᵀX/n`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;
/// 0/1 indicator matrix (edge calls, inclusion indicators).
pub type Indicator = DMatrix<u8>;

/// Relative asymmetry below which `Syy`/`Sxx` are silently symmetrized.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Individual-level observations: `x` is `n × k`, `y` is `n × p`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualData {
    pub x: Matrix,
    pub y: Matrix,
}

impl IndividualData {
    pub fn new(x: Matrix, y: Matrix) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::Dimension(format!(
                "x has {} rows but y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    /// Copy with every column of `x` and `y` shifted to mean zero.
    pub fn centered(&self) -> Self {
        Self { x: center_columns(&self.x), y: center_columns(&self.y) }
    }
}

pub(crate) fn center_columns(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    let n = m.nrows().max(1) as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

/// Sufficient statistics driving the likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub syy: Matrix,
    pub syx: Matrix,
    pub sxx: Matrix,
    pub n: usize,
}

impl SummaryStats {
    /// Validates dimensions and symmetry. Near-symmetric inputs are replaced by
    /// `(M + Mᵀ)/2`; anything asymmetric beyond [`SYMMETRY_TOLERANCE`] is rejected.
    pub fn new(syy: Matrix, syx: Matrix, sxx: Matrix, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("observation count n must be positive".into()));
        }
        let p = syy.nrows();
        let k = sxx.nrows();
        if syy.ncols() != p || sxx.ncols() != k {
            return Err(Error::Dimension("Syy and Sxx must be square".into()));
        }
        if syx.nrows() != p || syx.ncols() != k {
            return Err(Error::Dimension(format!(
                "Syx is {}x{}, expected {}x{}",
                syx.nrows(),
                syx.ncols(),
                p,
                k
            )));
        }
        if p == 0 || k == 0 {
            return Err(Error::Empty("need at least one response and one instrument".into()));
        }
        let syy = symmetrized("Syy", syy)?;
        let sxx = symmetrized("Sxx", sxx)?;
        for (name, m) in [("Syy", &syy), ("Sxx", &sxx)] {
            if m.diagonal().iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::Domain(format!("{name} has a negative or non-finite diagonal")));
            }
        }
        if syx.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("Syx has non-finite entries".into()));
        }
        Ok(Self { syy, syx, sxx, n })
    }

    pub fn p(&self) -> usize {
        self.syy.nrows()
    }

    pub fn k(&self) -> usize {
        self.sxx.nrows()
    }
}

fn symmetrized(name: &'static str, m: Matrix) -> Result<Matrix> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = (&m - m.transpose()).amax() / scale;
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::Asymmetric { name, asymmetry: asym });
    }
    if asym == 0.0 {
        return Ok(m);
    }
    Ok((&m + m.transpose()) * 0.5)
}

/// Raw cross-product moments. No centering is applied.
pub fn summarize(x: &Matrix, y: &Matrix) -> Result<SummaryStats> {
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension(format!(
            "x has {} rows but y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    let n = x.nrows();
    if n == 0 {
        return Err(Error::Empty("no observations".into()));
    }
    let nf = n as f64;
    let syy = y.tr_mul(y) / nf;
    let syx = y.tr_mul(x) / nf;
    let sxx = x.tr_mul(x) / nf;
    SummaryStats::new(syy, syx, sxx, n)
}

/// Binary `p × k` matrix: entry `(i, l)` is set when instrument `l` may affect response `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignMask {
    d: DMatrix<bool>,
}

impl DesignMask {
    pub fn new(d: DMatrix<bool>) -> Self {
        Self { d }
    }

    /// Any nonzero entry counts as set.
    pub fn from_numeric(m: &Matrix) -> Self {
        Self { d: m.map(|v| v != 0.0) }
    }

    pub fn identity(p: usize) -> Self {
        Self { d: DMatrix::from_fn(p, p, |i, j| i == j) }
    }

    /// Block-diagonal mask: response `r` owns columns `r*per .. (r+1)*per`.
    pub fn block(p: usize, per: usize) -> Self {
        Self { d: DMatrix::from_fn(p, p * per, |i, l| l / per == i) }
    }

    pub fn p(&self) -> usize {
        self.d.nrows()
    }

    pub fn k(&self) -> usize {
        self.d.ncols()
    }

    #[inline]
    pub fn get(&self, i: usize, l: usize) -> bool {
        self.d[(i, l)]
    }

    pub fn as_matrix(&self) -> &DMatrix<bool> {
        &self.d
    }

    pub fn to_numeric(&self) -> Matrix {
        self.d.map(|b| if b { 1.0 } else { 0.0 })
    }

    /// Instruments allowed for response `i`.
    pub fn instruments(&self, i: usize) -> Vec<usize> {
        (0..self.k()).filter(|&l| self.d[(i, l)]).collect()
    }

    /// Instruments set in row `i` and in no other row.
    pub fn exclusive_instruments(&self, i: usize) -> Vec<usize> {
        (0..self.k())
            .filter(|&l| self.d[(i, l)] && (0..self.p()).all(|r| r == i || !self.d[(r, l)]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    /// `X` and `Y`.
    Individual,
    /// `Syy`, `Syx`, `Sxx`.
    SummaryCov,
    /// `Sxx`, `Beta`, `SigmaHat`.
    BetaSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationStatus {
    Ok,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub status: ValidationStatus,
    /// Rows with no instrument at all.
    pub empty_rows: Vec<usize>,
    /// Rows lacking an instrument exclusive to them.
    pub non_identifiable_rows: Vec<usize>,
}

impl ValidationReport {
    pub fn message(&self) -> String {
        let mut parts = Vec::new();
        if !self.empty_rows.is_empty() {
            parts.push(format!("responses without any instrument: {:?}", self.empty_rows));
        }
        if !self.non_identifiable_rows.is_empty() {
            parts.push(format!(
                "responses without an exclusive instrument: {:?}",
                self.non_identifiable_rows
            ));
        }
        if parts.is_empty() {
            "design ok".to_string()
        } else {
            parts.join("; ")
        }
    }

    /// `Err` when the status is [`ValidationStatus::Error`].
    pub fn into_result(self) -> Result<Self> {
        match self.status {
            ValidationStatus::Error => Err(Error::Design(self.message())),
            _ => Ok(self),
        }
    }
}

/// Checks the instrument design. Missing exclusive instruments are fatal only
/// for the `Beta`/`SigmaHat` input mode, which needs them to recover `A`.
pub fn validate_design(d: &DesignMask, mode: InputMode) -> ValidationReport {
    let empty_rows: Vec<usize> = (0..d.p()).filter(|&i| d.instruments(i).is_empty()).collect();
    let non_identifiable_rows: Vec<usize> = (0..d.p())
        .filter(|&i| d.exclusive_instruments(i).is_empty())
        .collect();
    let status = if !empty_rows.is_empty() || d.p() == 0 || d.k() == 0 {
        ValidationStatus::Error
    } else if non_identifiable_rows.is_empty() {
        ValidationStatus::Ok
    } else if mode == InputMode::BetaSummary {
        ValidationStatus::Error
    } else {
        ValidationStatus::Warning
    };
    ValidationReport { status, empty_rows, non_identifiable_rows }
}

/// Prior and proposal settings shared by both priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub a_rho: f64,
    pub b_rho: f64,
    pub nu1: f64,
    pub a_psi: f64,
    pub b_psi: f64,
    pub nu2: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub prop_var_a: f64,
    pub prop_var_b: f64,
    pub threshold_prop_var: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            a_rho: 0.5,
            b_rho: 0.5,
            nu1: 1e-4,
            a_psi: 0.5,
            b_psi: 0.5,
            nu2: 1e-4,
            a_sigma: 0.01,
            b_sigma: 0.01,
            prop_var_a: 0.01,
            prop_var_b: 0.01,
            threshold_prop_var: 0.01,
        }
    }
}

impl HyperParams {
    /// Errors on non-positive values; returns warnings for spike factors above 1.
    pub fn validate(&self) -> Result<Vec<String>> {
        let named = [
            ("a_rho", self.a_rho),
            ("b_rho", self.b_rho),
            ("nu1", self.nu1),
            ("a_psi", self.a_psi),
            ("b_psi", self.b_psi),
            ("nu2", self.nu2),
            ("a_sigma", self.a_sigma),
            ("b_sigma", self.b_sigma),
            ("prop_var_a", self.prop_var_a),
            ("prop_var_b", self.prop_var_b),
            ("threshold_prop_var", self.threshold_prop_var),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let mut warnings = Vec::new();
        for (name, v) in [("nu1", self.nu1), ("nu2", self.nu2)] {
            if v > 1.0 {
                warnings.push(format!("{name} = {v} exceeds 1: the spike is wider than the slab"));
            }
        }
        Ok(warnings)
    }
}

/// Latent state of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralParams {
    /// Effective response-to-response effects, zero diagonal.
    pub a: Matrix,
    /// Pre-threshold latent values (threshold prior only).
    pub a_latent: Matrix,
    pub b: Matrix,
    pub b_latent: Matrix,
    /// Residual variances, the diagonal of `Σ`.
    pub sigma: Vector,
    pub tau: Matrix,
    pub eta: Matrix,
    pub gamma: Indicator,
    pub phi: Indicator,
    pub rho: Matrix,
    pub psi: Matrix,
    pub t_a: f64,
    pub t_b: f64,
}

impl StructuralParams {
    /// `A = B = 0`, unit variances, indicators off, thresholds at 0.1.
    pub fn zeros(p: usize, k: usize) -> Self {
        Self {
            a: Matrix::zeros(p, p),
            a_latent: Matrix::zeros(p, p),
            b: Matrix::zeros(p, k),
            b_latent: Matrix::zeros(p, k),
            sigma: Vector::from_element(p, 1.0),
            tau: Matrix::from_element(p, p, 1.0),
            eta: Matrix::from_element(p, k, 1.0),
            gamma: Indicator::zeros(p, p),
            phi: Indicator::zeros(p, k),
            rho: Matrix::from_element(p, p, 0.5),
            psi: Matrix::from_element(p, k, 0.5),
            t_a: 0.1,
            t_b: 0.1,
        }
    }

    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    pub fn k(&self) -> usize {
        self.b.ncols()
    }
}

/// `I - A`.
pub fn i_minus(a: &Matrix) -> Matrix {
    Matrix::identity(a.nrows(), a.ncols()) - a
}

/// The bracketed quadratic term of the log-likelihood:
/// `n·tr(Syy(I−A)ᵀΣ⁻¹(I−A)) − 2n·tr(SyxBᵀΣ⁻¹(I−A)) + n·tr(SxxBᵀΣ⁻¹B)`,
/// evaluated as the sum of the per-response quadratic forms.
pub fn likelihood_exponent(stats: &SummaryStats, a: &Matrix, b: &Matrix, sigma: &Vector) -> f64 {
    (0..stats.p())
        .map(|j| raw_sse(j, stats, a, b) / sigma[j])
        .sum()
}

/// Log-likelihood at arbitrary `(A, B, σ)`; `-∞` when `I − A` is singular
/// or any variance is non-positive.
pub fn log_likelihood_at(stats: &SummaryStats, a: &Matrix, b: &Matrix, sigma: &Vector) -> f64 {
    if sigma.iter().any(|&s| !(s > 0.0)) {
        return f64::NEG_INFINITY;
    }
    let det = i_minus(a).determinant();
    if !det.is_finite() || det.abs() < f64::MIN_POSITIVE {
        return f64::NEG_INFINITY;
    }
    let n = stats.n as f64;
    let p = stats.p() as f64;
    -0.5 * n * p * (2.0 * PI).ln() - 0.5 * n * sigma.iter().map(|s| s.ln()).sum::<f64>()
        + n * det.abs().ln()
        - 0.5 * likelihood_exponent(stats, a, b, sigma)
}

pub fn log_likelihood(stats: &SummaryStats, params: &StructuralParams) -> f64 {
    log_likelihood_at(stats, &params.a, &params.b, &params.sigma)
}

fn raw_sse(j: usize, stats: &SummaryStats, a: &Matrix, b: &Matrix) -> f64 {
    let p = stats.p();
    let k = stats.k();
    // r = (I - A)_{j,.}
    let r: Vec<f64> = (0..p)
        .map(|c| if c == j { 1.0 - a[(j, c)] } else { -a[(j, c)] })
        .collect();
    let mut yy = 0.0;
    for u in 0..p {
        if r[u] == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for v in 0..p {
            acc += stats.syy[(u, v)] * r[v];
        }
        yy += r[u] * acc;
    }
    let mut yx = 0.0;
    for u in 0..p {
        if r[u] == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for l in 0..k {
            acc += stats.syx[(u, l)] * b[(j, l)];
        }
        yx += r[u] * acc;
    }
    let mut xx = 0.0;
    for l in 0..k {
        let bl = b[(j, l)];
        if bl == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for m in 0..k {
            acc += stats.sxx[(l, m)] * b[(j, m)];
        }
        xx += bl * acc;
    }
    stats.n as f64 * (yy - 2.0 * yx + xx)
}

/// Residual sum of squares for response `j`, clamped at zero.
pub fn sse_row(j: usize, stats: &SummaryStats, params: &StructuralParams) -> f64 {
    sse_row_at(j, stats, &params.a, &params.b)
}

pub(crate) fn sse_row_at(j: usize, stats: &SummaryStats, a: &Matrix, b: &Matrix) -> f64 {
    raw_sse(j, stats, a, b).max(0.0)
}
