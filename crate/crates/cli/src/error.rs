use std::path::PathBuf;
use std::process::ExitCode;

use sustain5g_core::model::ModelError;
use sustain5g_core::numerics::NumericsError;
use sustain5g_core::sim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, unparsable or inconsistent input. Exit 2.
    #[error("{0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    /// Numerical or internal failure, including unwritable output. Exit 3.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Exit 1.
    #[error("{failed} of {total} validation checks failed")]
    ValidationFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::ValidationFailed { .. } => 1,
            CliError::Config(_) | CliError::ReadConfig { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Write { .. } => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Model(m) => m.into(),
            SimError::InvalidConfig(_) => CliError::Config(e.to_string()),
            SimError::Keychain(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
