use std::path::PathBuf;

/// Exit status for configuration and validation failures.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for failures after the inputs were accepted.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot read {path}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("{path}")]
    Json { path: PathBuf, source: serde_json::Error },

    #[error(transparent)]
    Core(#[from] odcal::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status this error maps to.
    pub fn exit_code(&self) -> i32 {
        use odcal::Error as E;
        match self {
            CliError::Config(_) | CliError::Read { .. } | CliError::Json { .. } => EXIT_CONFIG,
            CliError::Core(
                E::InvalidParameter(_)
                | E::Parse { .. }
                | E::Input { .. }
                | E::InvalidGenome { .. }
                | E::UndefinedDenominator { .. }
                | E::Config(_),
            ) => EXIT_CONFIG,
            CliError::Core(_) | CliError::Io(_) => EXIT_RUNTIME,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
