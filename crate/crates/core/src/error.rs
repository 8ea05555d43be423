use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sector mismatch: operator acts on N={expected}, state lives on N={found}")]
    SectorMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian: max |A - A^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "eigendecomposition did not converge (dim {dim}, frobenius norm {frobenius:e}, \
         hermiticity deviation {hermiticity:e})"
    )]
    EigenFailure {
        dim: usize,
        frobenius: f64,
        hermiticity: f64,
    },

    #[error("step {step} out of range 1..={last}")]
    StepOutOfRange { step: usize, last: usize },

    #[error("energy level sets differ between distributions")]
    MismatchedLevels,

    #[error("N = {n} exceeds the supported maximum of {max}")]
    TooManySpins { n: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("power-law fit needs at least 3 points, got {0}")]
    InsufficientPoints(usize),

    #[error("power-law fit requires positive ordinates, found {value} at x = {x}")]
    NonPositive { x: f64, value: f64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
