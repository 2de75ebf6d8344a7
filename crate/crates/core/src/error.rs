use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("identically zero polynomial has no isolated roots")]
    ZeroPolynomial,

    #[error("polynomial must be univariate, has {0} variables")]
    NotUnivariate(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown catalog family `{0}`")]
    UnknownFamily(String),

    #[error("point is infeasible: violation {violation:e} exceeds tolerance {tolerance:e}")]
    Infeasible { violation: f64, tolerance: f64 },

    #[error("non-finite input data")]
    NonFinite,

    #[error("quadratic term is not negative semidefinite (largest eigenvalue {0:e})")]
    IndefiniteQuadratic(f64),

    #[error("degenerate window [{0}, {1}]")]
    DegenerateWindow(f64, f64),

    #[error("{0}")]
    Unsupported(String),

    #[error("too many constraints for pattern enumeration: m = {m} exceeds guard {guard}")]
    TooManyConstraints { m: usize, guard: usize },

    #[error("coincident analytic values; choose a generic center")]
    NonGeneric,

    #[error("no feasible point found in the sample box")]
    NoFeasiblePoint,

    #[error("subproblem solve failed: {0}")]
    Subproblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
