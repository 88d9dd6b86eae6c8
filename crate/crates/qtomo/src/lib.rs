//! Experiment drivers and file formats for the tomography toolkit.
//!
//! This crate carries everything that needs the OS: JSON/CSV artifacts,
//! the batch ensemble runner with its parallelism, and the `qtomo`
//! command-line tool. The numerics live in [`qtomo_core`].

pub mod ensemble;
pub mod formats;
pub mod specs;

pub use qtomo_core as core;

/// Tool version embedded in every output artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process-level error with the exit code it maps to.
#[derive(Debug)]
pub enum AppError {
    /// Bad arguments or unusable input files → exit 2.
    Usage(String),
    /// Failures during a run → exit 1.
    Runtime(String),
    /// The optimiser did not converge → exit 3.
    NonConvergence(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Runtime(_) => 1,
            AppError::NonConvergence(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Runtime(m) | AppError::NonConvergence(m) => m,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message())
    }
}

impl std::error::Error for AppError {}

/// Shorthand constructors used across the CLI.
pub fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

pub fn runtime(msg: impl Into<String>) -> AppError {
    AppError::Runtime(msg.into())
}
