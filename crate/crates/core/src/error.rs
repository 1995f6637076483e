use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("region does not intersect the grid: {0}")]
    EmptyRegion(String),

    #[error("cylinders are not nested: {0}")]
    NotNested(String),

    #[error("mollifier kernel exceeds the grid margin around the region: {0}")]
    KernelExceedsMargin(String),

    #[error("no admissible candidate: {0}")]
    NoCandidate(String),

    #[error("insufficient interior margin for test functions: {0}")]
    InsufficientMargin(String),

    #[error("inconsistent field pairing: {0}")]
    Inconsistent(String),

    #[error(
        "newton iteration did not converge at time level {level:?} \
         after {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence {
        level: Option<usize>,
        iterations: usize,
        residual: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Attach the failing time level to a `NonConvergence` error.
    pub fn at_level(self, k: usize) -> Self {
        match self {
            Error::NonConvergence {
                iterations,
                residual,
                ..
            } => Error::NonConvergence {
                level: Some(k),
                iterations,
                residual,
            },
            other => other,
        }
    }
}
