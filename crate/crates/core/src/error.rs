use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported group `{group}` for {what}")]
    UnsupportedGroup { group: String, what: &'static str },
    #[error("window mismatch: expected {expected} coordinates, got {got}")]
    WindowMismatch { expected: usize, got: usize },
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("budget exceeded: {needed} cells needed, cap is {cap}")]
    BudgetExceeded { needed: usize, cap: usize },
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
