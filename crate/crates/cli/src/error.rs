use ssg_core::SsgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files (exit code 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// The computation itself failed, e.g. a diverging loop (exit code 3).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Output could not be written (exit code 1).
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<SsgError> for CliError {
    fn from(e: SsgError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}
