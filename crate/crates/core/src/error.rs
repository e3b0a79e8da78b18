use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("row {row} sums to {sum}, expected 1")]
    NonStochasticRow { row: usize, sum: f64 },
    #[error("entry ({row}, {col}) is {value}, expected a probability in [0, 1]")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("noise rate {0} outside [0, 1)")]
    BadEps(f64),
    #[error("dataset has no clean labels")]
    MissingCleanLabels,
    #[error("dataset has no noisy labels")]
    MissingNoisyLabels,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("matrix is singular (pivot {pivot:e} below threshold)")]
    SingularMatrix { pivot: f64 },
    #[error("no analytic posterior oracle for this data")]
    OracleUnavailable,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteLoss { .. } | Error::SingularMatrix { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
