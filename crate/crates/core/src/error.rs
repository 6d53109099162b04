use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("no secondary stationary point for alpha = {alpha} (requires alpha >= 4)")]
    NoSecondaryMinimum { alpha: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("non-finite value encountered in {context} at step {step}; reduce the time step")]
    NonFinite { context: &'static str, step: u64 },

    #[error("observable `{0}` is not linear in the configuration")]
    NonlinearObservable(String),

    #[error("sample set is empty")]
    EmptySampleSet,

    #[error("histograms over {0} particles are not supported (at most 3)")]
    TooManyDimensions(usize),

    #[error("composition weights of order {0} are not available")]
    UnsupportedOrder(u32),

    #[error("composition weights fail the order conditions (residual {0:e})")]
    WeightVerification(f64),

    #[error("archive: {0}")]
    Archive(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}
