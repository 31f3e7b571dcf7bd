use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument was malformed or inconsistent with its operands.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A numerical or physical precondition was violated.
    #[error("configuration error: {0}")]
    Config(String),
    /// The requested operation is not defined for this configuration.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
