use thiserror::Error;

/// Errors raised by the library.
///
/// The variants are grouped so that a front end can map them onto exit
/// codes: input problems, graph preconditions, mode preconditions and
/// search failures are all distinguishable.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("attractor may be a singleton: {0}")]
    Singleton(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("search budget exhausted: {0}")]
    SearchExhausted(String),

    #[error("insufficient separation achieved: {0}")]
    InsufficientSeparation(String),

    #[error("verification failed at {check}: {detail}")]
    Verification { check: String, detail: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
