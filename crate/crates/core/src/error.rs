use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid election: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("invalid rule: {0}")]
    Rule(String),

    #[error("instance too large: {size} exceeds the {what} budget of {cap}")]
    TooLarge {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn rule(msg: impl Into<String>) -> Self {
        Error::Rule(msg.into())
    }
}
