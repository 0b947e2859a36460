//! Command-line driver for the Euler-Poisson-Makino laboratory.
//!
//! Subcommands: `simulate`, `norm`, `check-ineq`, `poisson` and
//! `static-test`. Exit codes: 0 success, 1 other failures (I/O, failed
//! inequality checks), 2 configuration or hypothesis rejection, 3 numerical
//! breakdown, 4 Picard non-contraction.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::{Path, PathBuf};

use thiserror::Error;

/// Environment variable holding the requested worker-thread count.
pub const THREADS_ENV: &str = "MAKINO_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    /// One message per violated setting.
    #[error("configuration rejected:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("{0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] makino_core::Error),

    /// A run hit its blow-up guard; partial output has been written.
    #[error("run aborted: {0}")]
    Aborted(String),

    /// An inequality report recorded failures.
    #[error("inequality check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        use makino_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Aborted(_) => 3,
            CliError::Core(e) => match e {
                E::Hypothesis(_) | E::InvalidParameter(_) => 2,
                E::Breakdown(_) | E::NonFinite { .. } => 3,
                E::NoContraction { .. } => 4,
                _ => 1,
            },
            CliError::Io(_) | CliError::CheckFailed(_) => 1,
        }
    }
}

/// Resolves `path` against `workdir` unless it is absolute.
pub fn resolve(workdir: &Path, path: impl AsRef<Path>) -> PathBuf {
    let p = path.as_ref();
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        workdir.join(p)
    }
}

/// Thread count from [`THREADS_ENV`], defaulting to 1.
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Config(vec![format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            )])),
        },
    }
}

fn io_error(what: &str, path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("cannot {what} {}: {e}", path.display()))
}
