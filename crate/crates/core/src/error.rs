use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("column `{column}` has zero variance")]
    ZeroVariance { column: String },

    #[error("columns `{a}` and `{b}` share fewer than 2 complete observations")]
    InsufficientData { a: String, b: String },

    #[error("column `{column}` has fewer than 2 distinct observed levels")]
    DegenerateColumn { column: String },

    #[error("contingency table of `{a}` x `{b}` has all mass in one row or column")]
    DegenerateTable { a: String, b: String },

    #[error("graphical lasso did not converge after {iterations} sweeps")]
    NotConverged { iterations: usize },

    #[error("input correlation matrix is singular; lambda = 0 requires a positive-definite matrix")]
    SingularInput,

    #[error("all off-diagonal correlations are zero; the lambda path is empty")]
    AllZeroCorrelations,

    #[error("regression for node {node} is rank deficient")]
    RankDeficient { node: usize },

    #[error("edge mask admits no positive-definite constrained estimate: {0}")]
    InfeasibleMask(String),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.6e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operation requires a {expected} bootstrap result")]
    WrongKind { expected: &'static str },

    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("{failed} of {total} replicates failed (more than 25%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("datasets do not share the same columns and scales")]
    ColumnMismatch,

    #[error(
        "confidence intervals are not available for centrality indices; \
         use the case-dropping bootstrap and the CS-coefficient to judge their stability"
    )]
    CentralityIntervalsUnsupported,
}

impl Error {
    /// Stable machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::ZeroVariance { .. } => "ZeroVariance",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::DegenerateColumn { .. } => "DegenerateColumn",
            Error::DegenerateTable { .. } => "DegenerateTable",
            Error::NotConverged { .. } => "NotConverged",
            Error::SingularInput => "SingularInput",
            Error::AllZeroCorrelations => "AllZeroCorrelations",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::InfeasibleMask(_) => "InfeasibleMask",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::WrongKind { .. } => "WrongKind",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::TooManyFailures { .. } => "TooManyFailures",
            Error::ColumnMismatch => "ColumnMismatch",
            Error::CentralityIntervalsUnsupported => "CentralityIntervalsUnsupported",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
