use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("word of length {len} exceeds the cap R_max = {cap}")]
    Resource { len: usize, cap: usize },

    #[error("ill-conditioned Gram matrix ({context}); condition estimate {condition:e}")]
    Conditioning { context: String, condition: f64 },

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("atomic measure: {0}")]
    Atom(String),

    #[error("support window: {0}")]
    SupportWindow(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
