use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,
    #[error("non-positive B-inner product {0:e}; B is not positive definite")]
    NonPositiveDenominator(f64),
    #[error("normal vector Bv is numerically zero")]
    DegenerateNormal,
    #[error("operation needs dense matrices but only forward operators are available")]
    DenseRequired,
    #[error("sampler produced a numerically null vector in {0} consecutive attempts")]
    DegenerateSample(usize),
    #[error("dimension {0} too small for this operation (need at least {1})")]
    DimensionTooSmall(usize, usize),
    #[error("step size undefined for b = 0")]
    ZeroB,
    #[error("step size undefined for d = {0:e} <= 0")]
    NonPositiveD(f64),
    #[error("aggregated search direction is numerically zero")]
    ZeroAggregate,
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("B failed the symmetric positive definite probe: {0}")]
    NotSpd(String),
    #[error("B failed the Hermitian positive definite probe: {0}")]
    NotHermitianPd(String),
    #[error("Cholesky factorization failed; B is not positive definite")]
    CholeskyFailure,
    #[error("dense eigensolver failed to converge")]
    EigensolverFailure,
    #[error("maximal quotient is zero; relative error undefined (absolute error {0:e})")]
    ZeroMaxValue(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("matrix format error: {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
