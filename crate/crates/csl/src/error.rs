//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("embedding failure: {0}")]
    EmbeddingFailure(String),

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("invalid immersion: {0}")]
    InvalidImmersion(String),

    #[error("point at infinity: stereographic inverse is undefined at the north pole")]
    PointAtInfinity,

    #[error("refinement needed: {reason} (required max edge length {required_edge_length:.3e})")]
    RefinementNeeded {
        reason: String,
        required_edge_length: f64,
    },

    #[error("did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("eigensolver iteration limit: {0}")]
    IterationLimit(String),

    #[error("invalid comparison: {0}")]
    InvalidComparison(String),

    #[error("invariant failure: {0}")]
    InvariantFailure(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
