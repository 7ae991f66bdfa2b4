use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_STEP_COLLAPSE: u8 = 4;
pub const EXIT_CONDITION_NOT_MET: u8 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] koradial::Error),

    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Read { .. } => EXIT_CONFIG,
            CliError::Core(koradial::Error::InvalidSpec(_)) => EXIT_CONFIG,
            CliError::Core(koradial::Error::ConditionNotMet(_)) => EXIT_CONDITION_NOT_MET,
            CliError::Core(_) | CliError::Write { .. } | CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
