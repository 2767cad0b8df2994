use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model or analysis parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data (prices, returns, curves) violates a precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// A closed-form expression was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is only derived for a restricted parameter family.
    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Too few points in the exponential growth window to fit a slope.
    #[error("insufficient growth: {points} point(s) in the growth window, need at least 3")]
    InsufficientGrowth { points: usize },

    #[error("degenerate variance: all samples are equal")]
    DegenerateVariance,
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
