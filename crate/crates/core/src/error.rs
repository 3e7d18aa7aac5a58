use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    #[error("incompatible sketches: {0}")]
    Incompatible(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("deserialization failed at byte offset {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("degenerate specification: {0}")]
    Degenerate(String),

    #[error("oracle aborted: {0}")]
    OracleAbort(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
