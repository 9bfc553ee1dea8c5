use nlre::NlreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Numeric {
        context: &'static str,
        #[source]
        source: NlreError,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { .. } | CliError::Io { .. } => 3,
        }
    }

    pub fn numeric(context: &'static str) -> impl FnOnce(NlreError) -> CliError {
        move |source| match source {
            NlreError::InvalidConfig(m) => CliError::Config(format!("{context}: {m}")),
            source => CliError::Numeric { context, source },
        }
    }

    pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
