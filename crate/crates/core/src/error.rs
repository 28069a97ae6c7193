use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subsystem shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("matrix function outside its domain: {0}")]
    Domain(String),

    #[error("unsupported shape for this construction: {0}")]
    UnsupportedShape(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("state on the boundary of the full-rank family (min eigenvalue {0:e})")]
    BoundaryState(f64),

    #[error("no marginal-preserving directions remain (kernel is empty)")]
    FullyConstrained,

    #[error("ill-conditioned reduced metric (condition number {0:e})")]
    NumericalDegeneracy(f64),

    #[error("entropy production rate {0:e} is below the stationarity threshold")]
    StationaryPoint(f64),

    #[error("generator is not local (off-local residual {0:e})")]
    NonLocalGenerator(f64),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
