use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Cholesky hit a non-positive pivot. This is a signal rather than a fault.
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPsd { pivot: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed conic problem: {0}")]
    MalformedProblem(String),

    #[error("solver stalled: {0}")]
    SolverStall(String),

    #[error("design failed: {0}")]
    Design(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
