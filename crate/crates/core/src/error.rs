use thiserror::Error;

/// Errors reported by construction, parsing and verification entry points.
///
/// Violations of mathematical claims are not errors: checkers return
/// reports with witnesses. An `Error` means the input itself was unusable
/// or a resource limit was hit before an answer could be produced.
#[derive(Debug, Error)]
pub enum Error {
    /// The cover relation contains a directed cycle; the witness lists a
    /// closed walk `v0 -> v1 -> ... -> v0` through the offending elements.
    #[error("cover relation has a cycle through {0:?}")]
    Cycle(Vec<usize>),

    /// Malformed or inconsistent input (file syntax, index out of range,
    /// a set that violates a documented precondition, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An enumeration or matrix would exceed the configured budget.
    #[error("resource budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn budget(msg: impl Into<String>) -> Self {
        Error::Budget(msg.into())
    }
}
