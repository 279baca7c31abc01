//! Reproducible experiments: configuration files, replica fan-out, result
//! tables and deterministic-versus-stochastic comparison reports.

mod compare;
mod config;
mod run;
pub mod table;

use std::path::Path;

use thiserror::Error;

use crate::branching::BranchingError;
use crate::detsolve::SolveError;
use crate::stochsim::SimError;

pub use compare::{compare, ComparisonReport, ComparisonRow, Z_FLAG};
pub use config::{parse_config, Alpha, ExperimentConfig, Format, Kernel, Model, Output};
pub use run::{execute, limits, run, THREADS_VAR};
pub use table::{Row, Table};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("line {line}: key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("tables share no (a, m, t) keys")]
    DisjointKeys,
    #[error("malformed table: {0}")]
    Table(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Branching(#[from] BranchingError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
