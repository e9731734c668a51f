//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numeric kernels.
///
/// Rejected inputs are reported as errors rather than silently regularized;
/// diagnostic magnitudes are carried as `f64` regardless of the working
/// scalar type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix entries not symmetric at ({i},{j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("matrix not positive definite (lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e})")]
    NotPositiveDefinite { lambda_min: f64, lambda_max: f64 },

    #[error("zero matrix not admissible here")]
    ZeroMatrix,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("profile outside the admissibility window for n = {n}")]
    WindowViolated { n: usize },

    #[error("grid too coarse: no node admits the required stencil")]
    GridTooCoarse,

    #[error("field does not match domain: {0}")]
    FieldMismatch(String),

    #[error("region not contained where required: {0}")]
    NotContained(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        energy_history: Vec<f64>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<V> = std::result::Result<V, Error>;
