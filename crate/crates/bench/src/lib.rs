//! Benchmark harness: run solver grids over the seeded problem suite, write
//! per-run trajectories and aggregate them into summary tables.

pub mod aggregate;
pub mod alloc;
pub mod cli;
pub mod run;
pub mod trajectory;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error(transparent)]
    Solver(#[from] condgrad::Error),
}

impl BenchError {
    pub fn usage(msg: impl Into<String>) -> Self {
        BenchError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration errors, 3 for I/O, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Usage(_) => 2,
            BenchError::Io { .. } => 3,
            BenchError::Parse { .. } | BenchError::Solver(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
