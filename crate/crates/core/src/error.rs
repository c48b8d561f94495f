use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("size limit exceeded: {what} needs {requested} entries, limit is {limit}")]
    SizeLimit {
        what: String,
        requested: u128,
        limit: u128,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid index: {0}")]
    Index(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("unsupported strategy: {0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}

pub(crate) fn domain_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
