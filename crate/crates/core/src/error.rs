use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem spec: {field}: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("not a probability vector: {0}")]
    NotProbability(String),

    #[error("budget exceeded: {what} needs more than {budget} candidates")]
    BudgetExceeded { what: String, budget: u64 },

    #[error("operation requires a spec with side information")]
    SideInfoRequired,

    #[error("operation is defined only for specs without side information")]
    SideInfoUnsupported,

    #[error("observation y = {0} has zero probability under the given state and action")]
    ZeroProbabilityObservation(usize),

    #[error("window length {window} does not divide horizon {horizon}")]
    WindowDivisibility { window: usize, horizon: usize },

    #[error("support of size {0} is too large for the exhaustive length oracle (max 8)")]
    SupportTooLarge(usize),

    #[error("belief not present in encoder table at stage {0}")]
    UnknownBelief(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
