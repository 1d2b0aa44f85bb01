use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    /// A tuple whose denominator `lambda - 1 + sum(beta)` is not positive.
    #[error("degenerate denominator {denominator} for tuple #{index} (nu = {nu})")]
    DegenerateDenominator {
        index: usize,
        nu: u32,
        denominator: f64,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::UnsupportedRegime(msg.into())
    }
}
