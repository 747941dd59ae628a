//! Scenario runner, verification suite and parameter sweeps for complex
//! quantum Hamilton–Jacobi dynamics.

use std::fmt;

pub mod config;
pub mod run;
pub mod setup;
pub mod sweep;
pub mod units;
pub mod verify;

pub use config::ConfigError;

/// Version stamped into every CSV and JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that roots relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "CQHJ_OUTPUT_ROOT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(ConfigError),
    Runtime(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) | CliError::Io(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}
