//! Synthetic networks and data from the structural model, evaluation metrics
//! and replicate orchestration.

mod metrics;
mod pca;
mod replicate;

pub use metrics::{auc, classification_metrics, mean_absolute_deviation, Confusion, Metrics};
pub use pca::pca_reduce;
pub use replicate::{bench_grid, run_replicate, run_replicates, BenchCell, ReplicateReport, ReplicateResult};

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::model::{i_minus, DesignMask, IndividualData, Matrix, Vector};
use crate::rng::Rng;

const MAX_NETWORK_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorDist {
    Normal,
    StudentT(f64),
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XDist {
    StandardNormal,
    Uniform { low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimDesign {
    pub p: usize,
    /// Fraction of off-diagonal entries kept after pruning.
    pub sparsity: f64,
    pub effect_magnitude: f64,
    pub n: usize,
    /// Per-trait share of variance explained by the instruments.
    pub variance_explained: f64,
    pub error_dist: ErrorDist,
    pub ivs_per_trait: usize,
    pub x_dist: XDist,
    /// Overrides the calibrated instrument effect.
    pub instrument_effect: Option<f64>,
    pub seed: u64,
}

impl Default for SimDesign {
    fn default() -> Self {
        Self {
            p: 5,
            sparsity: 0.5,
            effect_magnitude: 0.1,
            n: 10_000,
            variance_explained: 0.1,
            error_dist: ErrorDist::Normal,
            ivs_per_trait: 1,
            x_dist: XDist::StandardNormal,
            instrument_effect: None,
            seed: 0,
        }
    }
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n == 0 || self.ivs_per_trait == 0 {
            return Err(Error::Config("p, n and ivs_per_trait must be positive".into()));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(Error::Config(format!("sparsity {} outside (0, 1]", self.sparsity)));
        }
        if !(self.variance_explained > 0.0 && self.variance_explained < 1.0) {
            return Err(Error::Config(format!(
                "variance_explained {} outside (0, 1)",
                self.variance_explained
            )));
        }
        if !(self.effect_magnitude > 0.0 && self.effect_magnitude.is_finite()) {
            return Err(Error::Config("effect_magnitude must be positive".into()));
        }
        if let ErrorDist::StudentT(df) = self.error_dist {
            if !(df > 2.0) {
                return Err(Error::Config(format!("t errors need df > 2, got {df}")));
            }
        }
        if let XDist::Uniform { low, high } = self.x_dist {
            if !(high > low) {
                return Err(Error::Config("uniform X needs high > low".into()));
            }
        }
        Ok(())
    }

    /// Common instrument effect `β = sqrt(ve / ((1 − ve)·ivs))`, unless overridden.
    pub fn instrument_effect(&self) -> f64 {
        self.instrument_effect.unwrap_or_else(|| {
            let ve = self.variance_explained;
            (ve / ((1.0 - ve) * self.ivs_per_trait as f64)).sqrt()
        })
    }

    /// Block-diagonal mask with `ivs_per_trait` exclusive instruments per response.
    pub fn design_mask(&self) -> DesignMask {
        DesignMask::block(self.p, self.ivs_per_trait)
    }
}

/// Random `±m` network with a uniformly chosen `⌊sparsity·p(p−1)⌋` edges kept.
pub fn generate_network(design: &SimDesign, rng: &mut Rng) -> Result<Matrix> {
    design.validate()?;
    let p = design.p;
    let m = design.effect_magnitude;
    let off: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    let keep = (design.sparsity * off.len() as f64 + 1e-9).floor() as usize;
    for _ in 0..MAX_NETWORK_ATTEMPTS {
        let mut a = Matrix::zeros(p, p);
        for &(i, j) in &off {
            a[(i, j)] = if rng.random::<bool>() { m } else { -m };
        }
        let drop = sample(rng, off.len(), off.len() - keep);
        for idx in drop.iter() {
            let (i, j) = off[idx];
            a[(i, j)] = 0.0;
        }
        let det = i_minus(&a).lu().determinant();
        if det.is_finite() && det.abs() > 1e-8 {
            return Ok(a);
        }
    }
    Err(Error::Domain(format!(
        "no nonsingular network after {MAX_NETWORK_ATTEMPTS} attempts"
    )))
}

/// A simulated dataset and the quantities used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub data: IndividualData,
    pub b: Matrix,
    /// Per-trait sample share of `Var(Y_i)` carried by the instruments.
    pub realized_ve: Vector,
}

fn draw_error(dist: ErrorDist, rng: &mut Rng) -> f64 {
    match dist {
        ErrorDist::Normal => StandardNormal.sample(rng),
        ErrorDist::StudentT(df) => {
            let t: f64 = StudentT::new(df).expect("df checked").sample(rng);
            t / (df / (df - 2.0)).sqrt()
        }
        ErrorDist::Laplace => {
            let u: f64 = rng.random::<f64>() - 0.5;
            -std::f64::consts::FRAC_1_SQRT_2 * u.signum() * (1.0 - 2.0 * u.abs()).ln()
        }
    }
}

/// `Y_t = (I − A)⁻¹ (B X_t + E_t)` with unit-variance errors. `X` is drawn
/// first in row-major order, then `E`.
pub fn generate_dataset(
    a: &Matrix,
    d: &DesignMask,
    design: &SimDesign,
    rng: &mut Rng,
) -> Result<SimulatedData> {
    design.validate()?;
    let p = a.nrows();
    if d.p() != p {
        return Err(Error::Dimension(format!("network has {p} responses, design mask {}", d.p())));
    }
    let k = d.k();
    let n = design.n;
    let m_inv = i_minus(a).try_inverse().ok_or(Error::Singular)?;
    let beta = design.instrument_effect();
    let b = d.to_numeric() * beta;

    let mut x = Matrix::zeros(n, k);
    for t in 0..n {
        for l in 0..k {
            x[(t, l)] = match design.x_dist {
                XDist::StandardNormal => StandardNormal.sample(rng),
                XDist::Uniform { low, high } => rng.random_range(low..high),
            };
        }
    }
    let mut e = Matrix::zeros(n, p);
    for t in 0..n {
        for j in 0..p {
            e[(t, j)] = draw_error(design.error_dist, rng);
        }
    }
    let signal = &x * b.transpose() * m_inv.transpose();
    let y = &signal + &e * m_inv.transpose();

    let realized_ve = Vector::from_fn(p, |j, _| {
        let v_sig = signal.column(j).variance();
        let v_y = y.column(j).variance();
        if v_y > 0.0 {
            v_sig / v_y
        } else {
            0.0
        }
    });
    Ok(SimulatedData { data: IndividualData::new(x, y)?, b, realized_ve })
}

/// The network of the five-trait worked example.
pub fn worked_example_network() -> Matrix {
    Matrix::from_row_slice(
        5,
        5,
        &[
            0.0, -0.1, 0.0, 0.0, 0.1, //
            0.1, 0.0, -0.1, 0.1, 0.1, //
            0.0, -0.1, 0.0, 0.0, 0.1, //
            0.0, -0.1, 0.0, 0.0, 0.0, //
            0.0, 0.1, 0.0, 0.0, 0.0,
        ],
    )
}

/// Five responses and six instruments; the first response owns two.
pub fn worked_example_mask() -> DesignMask {
    let mut d = Matrix::zeros(5, 6);
    d[(0, 0)] = 1.0;
    d[(0, 1)] = 1.0;
    for r in 1..5 {
        d[(r, r + 1)] = 1.0;
    }
    DesignMask::from_numeric(&d)
}

/// `n = 10000`, `X ~ U(0, 5)`, unit instrument effects, normal errors.
pub fn worked_example_design(seed: u64) -> SimDesign {
    SimDesign {
        p: 5,
        n: 10_000,
        x_dist: XDist::Uniform { low: 0.0, high: 5.0 },
        instrument_effect: Some(1.0),
        seed,
        ..SimDesign::default()
    }
}
