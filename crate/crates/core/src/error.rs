use thiserror::Error;

/// Errors raised by the engine and the bundled models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("batch error: {0}")]
    Batch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
