//! Error type shared across the solver crates.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A sampled function returned NaN or infinity at a grid node.
    #[error("non-finite sample at node ({x}, {y})")]
    NonFiniteSample { x: f64, y: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Dense Green's matrices are refused above the documented grid limit.
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// Conjugate gradients hit nonpositive curvature, i.e. the operator is
    /// not symmetric positive definite along the current search direction.
    #[error("conjugate gradient breakdown: {0}")]
    CgBreakdown(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
