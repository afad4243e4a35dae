use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("operator is not symmetric: asymmetry {asymmetry:e} exceeds tolerance {tol:e}")]
    NotSymmetric { asymmetry: f64, tol: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("symmetric eigensolver failed to converge (dim {0})")]
    EigenNoConvergence(usize),

    #[error("not a positive contraction: spectrum [{lambda_min:e}, {lambda_max:e}] leaves [0, 1]")]
    NotContraction { lambda_min: f64, lambda_max: f64 },

    #[error("rank-deficient basis: vector {index} lies in the span of the preceding vectors")]
    RankDeficient { index: usize },

    #[error("invalid sampler: {0}")]
    InvalidSampler(String),

    #[error("{0} sampler has no closed-form second moment; use the Monte Carlo estimate")]
    NoClosedForm(&'static str),

    #[error("{0} sampler is not discrete")]
    NotDiscrete(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coercivity assumption unmet: C = {0} must lie in (0, 1]")]
    Coercivity(f64),

    #[error("enumeration budget exceeded: {paths} paths > {budget}")]
    BudgetExceeded { paths: u128, budget: u64 },

    #[error("inconsistent linear system: residual {residual:e}")]
    Inconsistent { residual: f64 },

    #[error("matrix market, line {line}: {message}")]
    MatrixMarket { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
