//! Crate-wide error type.

/// Errors returned across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Hash evaluated outside its declared domain.
    #[error("index {index} out of hash domain [0, {domain})")]
    OutOfDomain { index: u64, domain: u64 },

    /// Requested parameters exceed what the field arithmetic can host.
    #[error("capacity: {0}")]
    Capacity(String),

    #[error("unsupported activation: {0}")]
    UnsupportedActivation(String),

    /// A matrix required to have full rank is numerically rank deficient.
    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Malformed on-disk data; `field` names the offending header or column.
    #[error("format error in {field}: {message}")]
    Format { field: String, message: String },

    /// An iteration failed to converge within its sweep budget.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
