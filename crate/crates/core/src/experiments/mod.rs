//! Sweep configuration, orchestration, output files and the acceptance runner.

pub mod config;
pub mod sweep;
pub mod verify;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::geometry::GeometryError;
use crate::solvers::SolverError;
use crate::variational::VariationalError;

pub use config::{AnsatzKind, ReferenceMode, SweepConfig};
pub use sweep::{run_and_write, run_sweep, SweepOutcome, SweepRecord, CSV_HEADER};
pub use verify::{run_criterion, verify_all, CheckOutcome, DeepRitzFixture, VerifyOptions, VerifyReport};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read config {path:?}: {reason}")]
    MissingConfig { path: PathBuf, reason: String },
    #[error("i/o error on {path:?}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("sweep aborted at scale {scale} after {completed} records: {message}")]
    SweepFailed {
        scale: f64,
        message: String,
        completed: usize,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
    }

    /// Usage problems (bad or missing config) versus failures of the computation.
    pub fn is_usage(&self) -> bool {
        matches!(self, ExperimentError::Config(_) | ExperimentError::MissingConfig { .. })
    }
}
