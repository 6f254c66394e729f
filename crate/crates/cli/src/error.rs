use thiserror::Error;

/// Exit status for a run with at least one failed image.
pub const EXIT_IMAGE_FAILURE: i32 = 1;
/// Exit status for an invalid configuration.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad key, bad value or missing referenced file. Nothing was processed.
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] depthcue_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            _ => EXIT_IMAGE_FAILURE,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
