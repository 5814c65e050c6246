use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resolvent did not converge after {iterations} iterations (residual {residual:e})")]
    ResolventNotConverged { iterations: usize, residual: f64 },

    #[error("polar refinement did not converge (achieved relative tolerance {achieved:e})")]
    PolarNotConverged { achieved: f64 },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("unresolved geometry: {0}")]
    UnresolvedGeometry(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
