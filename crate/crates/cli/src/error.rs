use thiserror::Error;

/// Command failures, each tied to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] eprsteer_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for usage errors, 4 for states that fail numerically, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.root_cause() {
                eprsteer_core::Error::InvalidState(_) => 4,
                _ => 3,
            },
            CliError::Io { .. } => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
