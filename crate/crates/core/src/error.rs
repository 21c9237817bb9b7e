use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("{name} is not symmetric (relative asymmetry {asymmetry:.3e})")]
    Asymmetric { name: &'static str, asymmetry: f64 },

    #[error("invalid design mask: {0}")]
    Design(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I - A is singular")]
    Singular,

    #[error("degenerate rank-1 update at ({i}, {j}): denominator {denominator:.3e}")]
    DegenerateUpdate { i: usize, j: usize, denominator: f64 },

    #[error("recovery failed at {stage}: {reason}")]
    Recovery { stage: &'static str, reason: String },

    #[error("non-finite log-likelihood at initialization after {attempts} attempts")]
    Initialization { attempts: usize },

    #[error("replicate {index}: {source}")]
    Replicate { index: usize, source: Box<Error> },

    #[error("{0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
