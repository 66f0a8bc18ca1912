use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A config problem tied to a line of a config file.
    #[error("{path}:{line}: {message}")]
    Config { path: String, line: usize, message: String },

    #[error("{path}: {message}")]
    ConfigFile { path: String, message: String },

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: spike_age::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches experiment context to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for spike_age::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Run { context: what(), source })
    }
}
