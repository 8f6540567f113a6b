use thiserror::Error;

/// Errors raised by the numerical and structural operations of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NonHermitian { asymmetry: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("Cholesky factorization failed: matrix is not numerically positive definite")]
    CholeskyFail,
    #[error("matrix is rank deficient (singular value ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("weight validation failed: {0}")]
    ValidationFailed(String),
    #[error("certificate matrix C is singular")]
    SingularC,
    #[error("multi-index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("truncated space dimension {dim} exceeds the oracle cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
