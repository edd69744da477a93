//! Minimizers of the penalized energy: Galerkin solves for linear families and
//! a first-order trainer for networks, with optimization-gap certificates.

pub mod galerkin;
pub mod sparse;
pub mod train;

use thiserror::Error;

use crate::ansatz::AnsatzError;

pub use galerkin::{assemble, solve_linear, solve_linear_with, GalerkinSystem, LinearMethod, LinearSolution, SolveOptions};
pub use train::{
    certify_energy, certify_gap, empirical_envelope, train_network, GapCertificate, Reference, ReferenceKind,
    TraceEntry, TrainConfig, TrainReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("matrix is not positive definite: pivot {pivot} (value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("conjugate gradients did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("linear residual {0:e} above tolerance")]
    ResidualTooLarge(f64),
    #[error("training diverged at iteration {iteration} (energy {energy:e})")]
    Diverged {
        iteration: usize,
        energy: f64,
        trace: Vec<train::TraceEntry>,
    },
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
}
