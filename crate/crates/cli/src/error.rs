use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A config field violates a precondition. Exit code 2.
    #[error("invalid config field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// The library rejected the request during the run. Exit code 2.
    #[error("rejected: {0}")]
    Rejected(turbulight::Error),

    /// A numerical tolerance could not be met. Exit code 3.
    #[error("accuracy failure: {0}")]
    Accuracy(turbulight::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Attributes a library error raised while checking `field`.
    pub fn at(field: impl Into<String>, err: turbulight::Error) -> Self {
        if err.is_accuracy() {
            CliError::Accuracy(err)
        } else {
            CliError::invalid(field, err.to_string())
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } | CliError::Rejected(_) => 2,
            CliError::Accuracy(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<turbulight::Error> for CliError {
    fn from(err: turbulight::Error) -> Self {
        if err.is_accuracy() {
            CliError::Accuracy(err)
        } else {
            CliError::Rejected(err)
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
