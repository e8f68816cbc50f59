use thiserror::Error;

/// Failure classes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Parameters outside the admissible range (bad config, bad geometry).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A numerical procedure did not converge or produced unusable output.
    #[error("solver failure: {0}")]
    Solver(String),
    /// A structural hypothesis (unique nondegenerate minimum, injectivity, ...) fails.
    #[error("assumption violated: {0}")]
    Assumption(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn solver<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Solver(msg.into()))
}
