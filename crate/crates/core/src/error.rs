use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Hurst index {0} is outside (0, 1)")]
    InvalidHurst(f64),

    #[error("operation needs H >= 1/2, got H = {0}")]
    HurstBelowHalf(f64),

    #[error("{0}")]
    Domain(String),

    #[error("quadrature missed tolerance {tolerance:e} (last error estimate {estimate:e})")]
    Quadrature { tolerance: f64, estimate: f64 },

    #[error("invalid interval ({a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("coordinates {first} and {second} of a box overlap")]
    OverlappingBox { first: usize, second: usize },

    #[error("arity mismatch: expected {expected}, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("time {0} is not a grid point of the path")]
    OffGrid(f64),

    #[error("covariance matrix is not positive definite even with a {ridge:e} ridge")]
    Factorization { ridge: f64 },

    #[error("grid step {delta} is too coarse for band half-width {eps} (need step <= eps/4)")]
    Resolution { delta: f64, eps: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
