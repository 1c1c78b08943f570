use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("field mismatch: GF(2^{0}) vs GF(2^{1})")]
    FieldMismatch(u32, u32),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
