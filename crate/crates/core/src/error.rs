use thiserror::Error;

/// Errors raised by the bound evaluators, verifiers and quantizer design.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The call is not valid for the given query (e.g. wrong perception measure).
    #[error("usage error: {0}")]
    Usage(String),

    /// A closed form was requested outside the region where it is defined.
    #[error("state error: {0}")]
    State(String),

    /// An iterative routine failed to converge or lost precision.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A hypothesis required by a verifier does not hold for the input.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
