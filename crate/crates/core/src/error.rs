use std::path::PathBuf;

/// Errors raised by the forecasting engine, the baseline estimator, the
/// frame sources and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-monotonic time: {current} s arrived after {previous} s")]
    NonMonotonicTime { previous: f64, current: f64 },

    #[error("model diverged after {updates} updates (non-finite parameter)")]
    ModelDiverged { updates: u64 },

    #[error("singular design matrix: {0}")]
    SingularDesign(String),

    #[error("degenerate prior for output {output}: prior covariance is not positive definite")]
    DegeneratePrior { output: usize },

    #[error("estimator not ready: {0}")]
    NotReady(&'static str),

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("ingestion error in {path}: {reason}")]
    Ingestion { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
