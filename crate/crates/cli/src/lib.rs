//! Command line driver: edge list in, eigenpairs and convergence history out.

pub mod args;
pub mod output;
pub mod run;

use std::io;
use std::path::PathBuf;

use lapsira::graph::GraphError;
use lapsira::sira::SiraError;
use lapsira_oracle::OracleError;
use thiserror::Error;

pub use args::{Cli, Command};
pub use run::{execute, Outcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Graph {
        path: PathBuf,
        #[source]
        source: GraphError,
    },

    #[error(transparent)]
    Solver(#[from] SiraError),

    #[error(transparent)]
    Oracle(#[from] OracleError),

    #[error("could not serialize output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        1
    }
}

/// Exit status contract.
pub mod exit {
    pub const CONVERGED: i32 = 0;
    pub const USAGE_OR_IO: i32 = 1;
    pub const PARTIAL: i32 = 2;
}
