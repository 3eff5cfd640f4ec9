//! Command-line experiment layer over `fockduet-core`: configuration
//! loading, the selectivity scan, target synthesis runs, duration
//! tables, and the built-in trajectory self-check. The binary in
//! `main.rs` is a thin argument-parsing shell over these modules so
//! integration tests can drive the same code paths in-process.

pub mod config;
pub mod output;
pub mod scan;
pub mod selfcheck;
pub mod synth;
pub mod timing;

use std::fmt;

use fockduet_core::CoreError;

/// Exit code contract of the binary.
pub const EXIT_OK: u8 = 0;
pub const EXIT_COMPILE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// An error tagged with the process exit code it maps to. The tag is
/// chosen by the failing stage, not the error type: the same core
/// error means a bad configuration when raised while resolving inputs
/// and a synthesis failure when raised inside the compiler.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn compile(source: CoreError) -> Self {
        Self { code: EXIT_COMPILE, message: source.to_string() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: message.into() }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: format!("{}: {source}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = std::result::Result<T, CliError>;
