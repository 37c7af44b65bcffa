use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("allpass pole radius {radius} is not strictly inside the unit circle")]
    Stability { radius: f64 },

    #[error("recursive filter state did not decay: {0}")]
    Instability(String),

    #[error("PAPR is undefined over an all-zero support")]
    UndefinedPapr,

    #[error("kernels do not share spectral content (max relative deviation {deviation:.3e})")]
    IncomparableKernels { deviation: f64 },

    #[error("degenerate variance")]
    DegenerateVariance,

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("argument {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("model used outside its validity range: {0}")]
    ModelRange(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
