use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error at '{path}': {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("archive {path}: {message}")]
    Archive { path: String, message: String },

    #[error("archive {path} was built from a different configuration (hash {found}, expected {expected})")]
    HashMismatch {
        path: String,
        found: String,
        expected: String,
    },

    #[error(transparent)]
    Numerical(#[from] homs_core::Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn archive(path: &Path, message: impl Into<String>) -> Self {
        CliError::Archive {
            path: path.display().to_string(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for input problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } | CliError::Archive { .. } | CliError::HashMismatch { .. } => 2,
            CliError::Numerical(_) | CliError::Verification(_) => 3,
        }
    }
}
