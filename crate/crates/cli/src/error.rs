use std::path::Path;

use lionlstm::dataio::DataError;
use lionlstm::forecaster::ForecastError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numerical: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<DataError> for CliError {
    fn from(err: DataError) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<ForecastError> for CliError {
    fn from(err: ForecastError) -> Self {
        if err.is_numerical() {
            CliError::Numerical(err.to_string())
        } else if matches!(err, ForecastError::Lion(_)) {
            CliError::Config(err.to_string())
        } else {
            CliError::Data(err.to_string())
        }
    }
}
