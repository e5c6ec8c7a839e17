use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("resource cap: {0}")]
    ResourceCap(qpe_spectra::Error),
    #[error("state preparation rejected {attempts} times in a row (observed acceptance 0/{attempts}, predicted P1 = {predicted:.3e})")]
    PrepExhausted { attempts: u64, predicted: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(qpe_spectra::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 0 success, 1 config or input error, 2 resource cap, 3 prep exhaustion.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ResourceCap(_) => 2,
            CliError::PrepExhausted { .. } => 3,
            CliError::Config { .. } | CliError::Io { .. } | CliError::Core(_) => 1,
        }
    }
}

impl From<qpe_spectra::Error> for CliError {
    fn from(e: qpe_spectra::Error) -> Self {
        match e {
            qpe_spectra::Error::QubitCapExceeded { .. } => CliError::ResourceCap(e),
            other => CliError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
