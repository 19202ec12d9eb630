//! CLI-level errors mapped onto process exit codes.

use thiserror::Error;

/// Anything that can abort a CLI invocation. Configuration problems (bad
/// flags, malformed spec files, impossible parameter combinations, I/O)
/// exit with code 1; numerical failures inside a solve exit with code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<thzbeam::Error> for CliError {
    fn from(e: thzbeam::Error) -> Self {
        match e {
            thzbeam::Error::Numerical(msg) => CliError::Numerical(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o error: {e}"))
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Config(format!("spec file parse error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("manifest serialization error: {e}"))
    }
}

impl From<tempfile::PersistError> for CliError {
    fn from(e: tempfile::PersistError) -> Self {
        CliError::Config(format!("atomic rename failed: {e}"))
    }
}

impl From<rayon::ThreadPoolBuildError> for CliError {
    fn from(e: rayon::ThreadPoolBuildError) -> Self {
        CliError::Config(format!("thread pool: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
