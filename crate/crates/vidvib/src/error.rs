use thiserror::Error;

use crate::io::IoError;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or parameter values.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Input that cannot be analysed: unreadable files, too few frames, no features.
    #[error("data error: {0}")]
    Data(String),
    /// A broken internal invariant.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl From<vidvib_core::Error> for CliError {
    fn from(e: vidvib_core::Error) -> Self {
        use vidvib_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter { .. } | E::Nyquist { .. } | E::InvalidRoi(_) => {
                CliError::Config(msg)
            }
            E::ResponseMismatch => CliError::Internal(msg),
            _ => CliError::Data(msg),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Sequence(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
