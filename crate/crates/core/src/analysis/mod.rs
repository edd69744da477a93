//! Closed-form reference cases, Steklov expansions on the disk, rate algebra
//! and decay-exponent fits.

pub mod cases;
pub mod fit;
pub mod low_regularity;
pub mod properties;
pub mod rates;
pub mod steklov;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::solvers::SolverError;
use crate::variational::VariationalError;

pub use cases::{CaseId, ExactFunction, ExactSolutionCase, ALL_CASES};
pub use fit::{fit_rate, RateFit, Window};
pub use low_regularity::{low_regularity_rate_experiment, LowRegularityReport};
pub use rates::{rho_nonuniform, rho_star_nonuniform, rho_star_uniform, rho_uniform, Scenario};
pub use steklov::{fourier_coeffs, penalty_gap_via_formula, steklov_modes_disk, Reconstruction, SteklovMode};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown case id {0:?}")]
    UnknownCase(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Variational(#[from] VariationalError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
