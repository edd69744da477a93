//! Catalog of model problems with closed-form solutions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisError;
use crate::geometry::{DiscreteFunction, DomainKind, Eval, Located, Point};
use crate::variational::{CoefficientField, RightHandSide};

use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    /// `-u'' = 1` on (0,1).
    IntervalPoisson,
    /// `-Laplace u = 1` on the unit disk.
    DiskRadial,
    /// `-Laplace u = 8 r cos(theta)` on the unit disk.
    DiskMode1,
    /// `-Laplace u = 2 pi^2 sin(pi x) sin(pi y)` on the unit square.
    SquareSine,
    /// `-u'' = f` with `f = 1` on (0, 1/2) and `-1` on (1/2, 1).
    IntervalSignflip,
}

pub const ALL_CASES: [CaseId; 5] = [
    CaseId::IntervalPoisson,
    CaseId::DiskRadial,
    CaseId::DiskMode1,
    CaseId::SquareSine,
    CaseId::IntervalSignflip,
];

impl CaseId {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::IntervalPoisson => "interval_poisson",
            CaseId::DiskRadial => "disk_radial",
            CaseId::DiskMode1 => "disk_mode1",
            CaseId::SquareSine => "square_sine",
            CaseId::IntervalSignflip => "interval_signflip",
        }
    }

    pub fn domain(self) -> DomainKind {
        match self {
            CaseId::IntervalPoisson | CaseId::IntervalSignflip => DomainKind::Interval,
            CaseId::DiskRadial | CaseId::DiskMode1 => DomainKind::UnitDiskPolar,
            CaseId::SquareSine => DomainKind::UnitSquare,
        }
    }

    pub fn case(self) -> ExactSolutionCase {
        ExactSolutionCase { id: self }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_CASES
            .iter()
            .copied()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| AnalysisError::UnknownCase(s.to_string()))
    }
}

/// A model problem `-div(A grad u) = f`, `u = 0` on the boundary, with its
/// exact solution and, where known, the exact penalized solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactSolutionCase {
    pub id: CaseId,
}

impl ExactSolutionCase {
    pub fn domain(&self) -> DomainKind {
        self.id.domain()
    }

    /// All catalog cases use `A = I`.
    pub fn coefficient(&self) -> CoefficientField {
        CoefficientField::Identity
    }

    pub fn rhs(&self) -> RightHandSide {
        match self.id {
            CaseId::IntervalPoisson | CaseId::DiskRadial => RightHandSide::constant(1.0),
            CaseId::DiskMode1 => RightHandSide::new("8 r cos(theta)", |x| 8.0 * x[0]),
            CaseId::SquareSine => RightHandSide::new("2 pi^2 sin(pi x) sin(pi y)", |x| {
                2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()
            }),
            CaseId::IntervalSignflip => RightHandSide::new("sign flip at 1/2", |x| if x[0] < 0.5 { 1.0 } else { -1.0 }),
        }
    }

    pub fn u_star_at(&self, x: Point) -> Eval {
        match self.id {
            CaseId::IntervalPoisson => Eval::new(0.5 * x[0] * (1.0 - x[0]), [0.5 - x[0], 0.0]),
            CaseId::DiskRadial => Eval::new(
                0.25 * (1.0 - x[0] * x[0] - x[1] * x[1]),
                [-0.5 * x[0], -0.5 * x[1]],
            ),
            CaseId::DiskMode1 => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                Eval::new(
                    x[0] * (1.0 - r2),
                    [1.0 - 3.0 * x[0] * x[0] - x[1] * x[1], -2.0 * x[0] * x[1]],
                )
            }
            CaseId::SquareSine => {
                let (sx, cx) = (PI * x[0]).sin_cos();
                let (sy, cy) = (PI * x[1]).sin_cos();
                Eval::new(sx * sy, [PI * cx * sy, PI * sx * cy])
            }
            CaseId::IntervalSignflip => {
                let t = x[0];
                if t <= 0.5 {
                    Eval::new(-0.5 * t * t + 0.25 * t, [0.25 - t, 0.0])
                } else {
                    Eval::new(0.5 * t * t - 0.75 * t + 0.25, [t - 0.75, 0.0])
                }
            }
        }
    }

    /// `u_lambda - u*`, known in closed form for every case except `square_sine`.
    pub fn penalty_shift_at(&self, x: Point, lambda: f64) -> Option<Eval> {
        match self.id {
            CaseId::IntervalPoisson | CaseId::DiskRadial => Some(Eval::new(0.5 / lambda, [0.0, 0.0])),
            CaseId::DiskMode1 => {
                let c = 2.0 / (lambda + 1.0);
                Some(Eval::new(c * x[0], [c, 0.0]))
            }
            CaseId::IntervalSignflip => {
                let c = 0.25 / (lambda + 2.0);
                Some(Eval::new(c * (1.0 - 2.0 * x[0]), [-2.0 * c, 0.0]))
            }
            CaseId::SquareSine => None,
        }
    }

    pub fn has_penalized_closed_form(&self) -> bool {
        self.id != CaseId::SquareSine
    }

    pub fn u_star(&self) -> ExactFunction {
        ExactFunction {
            case: *self,
            lambda: None,
            shift_only: false,
        }
    }

    pub fn u_lambda(&self, lambda: f64) -> Option<ExactFunction> {
        self.has_penalized_closed_form().then_some(ExactFunction {
            case: *self,
            lambda: Some(lambda),
            shift_only: false,
        })
    }

    /// `v_lambda = u* - u_lambda`.
    pub fn v_lambda(&self, lambda: f64) -> Option<ExactFunction> {
        self.has_penalized_closed_form().then_some(ExactFunction {
            case: *self,
            lambda: Some(lambda),
            shift_only: true,
        })
    }

    /// `||u_lambda - u*||_{H^1}` in closed form.
    pub fn penalty_gap(&self, lambda: f64) -> Option<f64> {
        match self.id {
            CaseId::IntervalPoisson => Some(0.5 / lambda),
            CaseId::DiskRadial => Some(PI.sqrt() * 0.5 / lambda),
            CaseId::DiskMode1 => Some((5.0 * PI).sqrt() / (lambda + 1.0)),
            CaseId::IntervalSignflip => Some((13.0f64 / 48.0).sqrt() / (lambda + 2.0)),
            CaseId::SquareSine => None,
        }
    }

    /// `||u_lambda - u*||_{L^2}` in closed form.
    pub fn penalty_gap_l2(&self, lambda: f64) -> Option<f64> {
        match self.id {
            CaseId::IntervalPoisson => Some(0.5 / lambda),
            CaseId::DiskRadial => Some(PI.sqrt() * 0.5 / lambda),
            CaseId::DiskMode1 => Some(PI.sqrt() / (lambda + 1.0)),
            CaseId::IntervalSignflip => Some(0.25 / (lambda + 2.0) / 3f64.sqrt()),
            CaseId::SquareSine => None,
        }
    }

    /// Conormal derivative `dA u* = n . grad u*` on the unit circle, as a function of the angle.
    pub fn boundary_flux(&self, theta: f64) -> Option<f64> {
        match self.id {
            CaseId::DiskRadial => Some(-0.5),
            CaseId::DiskMode1 => Some(-2.0 * theta.cos()),
            _ => None,
        }
    }
}

/// `u*`, `u_lambda` or `u* - u_lambda` of a catalog case as a function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFunction {
    case: ExactSolutionCase,
    lambda: Option<f64>,
    shift_only: bool,
}

impl ExactFunction {
    pub fn at(&self, x: Point) -> Eval {
        let base = self.case.u_star_at(x);
        let Some(lambda) = self.lambda else {
            return base;
        };
        let shift = self
            .case
            .penalty_shift_at(x, lambda)
            .expect("constructed only for cases with a penalized closed form");
        if self.shift_only {
            Eval::new(-shift.value, [-shift.grad[0], -shift.grad[1]])
        } else {
            Eval::new(
                base.value + shift.value,
                [base.grad[0] + shift.grad[0], base.grad[1] + shift.grad[1]],
            )
        }
    }
}

impl DiscreteFunction for ExactFunction {
    fn eval(&self, at: &Located) -> Eval {
        self.at(at.x)
    }

    fn domain_kind(&self) -> Option<DomainKind> {
        Some(self.case.domain())
    }
}
