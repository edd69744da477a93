//! Coefficient fields, right-hand sides, the forms `a`, `a_lambda` and the energies.

pub mod coefficient;
pub mod forms;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{DomainMesh, Point};

pub use coefficient::CoefficientField;
pub use forms::{
    bilinear_a, bilinear_a_lambda, bilinear_a_lambda_on, bilinear_a_on, energy, energy_on,
    gap_from_energies, optimization_gap, Gap,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariationalError {
    #[error("invalid coefficient field: {0}")]
    InvalidCoefficient(String),
    #[error("penalty parameter must be positive in penalty mode, got {0}")]
    NonPositivePenalty(f64),
    #[error("a_lambda requested on a problem with natural boundary conditions")]
    NaturalModeHasNoPenalty,
}

/// An `L^2` density `f`, given pointwise.
#[derive(Clone)]
pub struct RightHandSide {
    name: String,
    f: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
}

impl RightHandSide {
    pub fn new(name: impl Into<String>, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        RightHandSide {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        RightHandSide::new(format!("const:{c}"), move |_| c)
    }

    pub fn eval(&self, x: Point) -> f64 {
        (self.f)(x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for RightHandSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RightHandSide").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Dirichlet data enforced through `lambda * int u v ds`.
    Penalty,
    /// Natural (Neumann) boundary: no boundary term.
    Natural,
}

#[derive(Debug, Clone)]
pub struct PenalizedProblem {
    pub mesh: Arc<DomainMesh>,
    pub coefficient: CoefficientField,
    pub rhs: RightHandSide,
    pub lambda: f64,
    pub boundary_mode: BoundaryMode,
    /// Adds `int u v dx` to `a` (the `-div(A grad u) + u = f` Neumann problem).
    pub mass_term: bool,
}

impl PenalizedProblem {
    pub fn penalty(
        mesh: Arc<DomainMesh>,
        coefficient: CoefficientField,
        rhs: RightHandSide,
        lambda: f64,
    ) -> Result<Self, VariationalError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(VariationalError::NonPositivePenalty(lambda));
        }
        Ok(PenalizedProblem {
            mesh,
            coefficient,
            rhs,
            lambda,
            boundary_mode: BoundaryMode::Penalty,
            mass_term: false,
        })
    }

    pub fn natural(
        mesh: Arc<DomainMesh>,
        coefficient: CoefficientField,
        rhs: RightHandSide,
        mass_term: bool,
    ) -> Self {
        PenalizedProblem {
            mesh,
            coefficient,
            rhs,
            lambda: 0.0,
            boundary_mode: BoundaryMode::Natural,
            mass_term,
        }
    }

    /// Same problem with a different penalty.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self, VariationalError> {
        let mut p = self.clone();
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(VariationalError::NonPositivePenalty(lambda));
        }
        p.lambda = lambda;
        p.boundary_mode = BoundaryMode::Penalty;
        Ok(p)
    }

    /// Weight of the boundary term in the energy: `lambda` or zero in natural mode.
    pub fn boundary_weight(&self) -> f64 {
        match self.boundary_mode {
            BoundaryMode::Penalty => self.lambda,
            BoundaryMode::Natural => 0.0,
        }
    }
}
