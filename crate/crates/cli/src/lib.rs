//! Library side of the `compadv` command-line tool.

pub mod commands;
pub mod config;
pub mod error;

pub use config::ScenarioConfig;
pub use error::{CliError, CliResult, ExitCode};
