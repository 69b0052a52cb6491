//! Command-line front end for the `cornerclass` experiments.

pub mod config;
pub mod model_file;
pub mod run;

use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or missing fields. Exit code 2.
    #[error("{0}")]
    Config(String),

    /// Failure while running an experiment or reading data. Exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

impl From<cornerclass::Error> for CliError {
    fn from(e: cornerclass::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<model_file::ModelFileError> for CliError {
    fn from(e: model_file::ModelFileError) -> Self {
        CliError::Runtime(e.to_string())
    }
}
