use thiserror::Error;

use crate::netlang::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, grids, preset definitions or mismatched shapes.
    #[error("configuration error: {0}")]
    Config(String),

    /// The modulation network cancelled the amplitude everywhere.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Decomposition failed or produced values violating its contract.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Caller passed data that breaks a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors caused by user input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse(_))
    }
}
