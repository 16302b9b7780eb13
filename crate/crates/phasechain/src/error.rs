use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid phase-type distribution: {0}")]
    InvalidPhaseType(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("ill-conditioned problem: {0}")]
    Conditioning(String),

    #[error("system has no memory terms; it is a plain linear ODE, use an ODE solver directly")]
    NoMemoryTerms,

    #[error("stability gate refused: {0}")]
    StabilityGate(String),

    #[error("grid check failed: {0}")]
    GridCheck(String),

    #[error("problem specification error: {0}")]
    Spec(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("linear algebra backend: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
