use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The observed data carry no information (e.g. an all-zero path).
    #[error("degenerate estimate: {0}")]
    Degenerate(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    /// The caller combined arguments that do not belong together.
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
