use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },

    #[error("invalid genome: expected {expected} values, got {actual}")]
    InvalidGenome { expected: usize, actual: usize },

    #[error("MAPE undefined: target for period {period} is zero")]
    UndefinedDenominator { period: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), line, message: message.into() }
    }
}
