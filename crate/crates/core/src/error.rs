use thiserror::Error;

/// Errors raised by the audit arithmetic, sampling and simulation layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("delta {0} is outside the error-rate table (0..=4)")]
    OutOfTable(u32),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::InvalidState(msg.into())
    }

    /// Stable machine-readable code, used by the HTTP layer and the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::OutOfTable(_) => "out_of_table",
            Error::InvalidState(_) => "invalid_state",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
