//! Bayesian inference of directed, possibly cyclic networks among traits
//! using genetic instruments.
//!
//! The structural model is `Y = A·Y + B·X + E` with `E ~ N(0, diag(σ))`.
//! Inference runs entirely on the second-moment matrices `Syy`, `Syx`, `Sxx`,
//! which can come from individual data, from a covariance summary, or be
//! reconstructed from marginal regression summaries (see [`recovery`]).

pub mod error;
pub mod linalg;
pub mod model;
pub mod recovery;
pub mod rng;
pub mod sampler;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    log_likelihood, summarize, DesignMask, HyperParams, IndividualData, InputMode, Matrix,
    StructuralParams, SummaryStats, ValidationReport, ValidationStatus, Vector,
};
