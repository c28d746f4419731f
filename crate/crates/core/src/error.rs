use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh has no interior degrees of freedom")]
    NoInteriorDofs,

    #[error("unsupported quadrature degree {0} (supported: 1..=10)")]
    UnsupportedDegree(usize),

    #[error("fractional order s = {0} outside (0, 1)")]
    InvalidOrder(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("point ({0}, {1}) is not strictly inside the domain")]
    PointOutsideDomain(f64, f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("negative quadratic form {0:e}; assembly is broken")]
    NegativeQuadraticForm(f64),

    #[error("linear solve did not reach tolerance: relative residual {0:e}")]
    SolveFailed(f64),

    #[error("invalid bounds: a = {a}, b = {b}")]
    InvalidBounds { a: f64, b: f64 },

    #[error("unknown example id {0}")]
    UnknownExample(String),

    #[error("optimizer did not converge (residual {residual:e} after {iterations} iterations)")]
    NotConverged { residual: f64, iterations: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
