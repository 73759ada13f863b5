//! Library side of the `odcal` command: configuration, command bodies and
//! exit-code classification. The binary only parses flags and dispatches.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::{CliError, Result};
