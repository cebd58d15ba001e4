use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("action index {index} outside action space of size {size}")]
    ActionOutOfRange { index: usize, size: usize },

    #[error("deployment drew no users after {attempts} attempts")]
    EmptyDeployment { attempts: usize },

    #[error("empty sample set")]
    EmptySamples,

    #[error("run generated no packets; metrics undefined")]
    NoPackets,
}

impl Error {
    pub fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
