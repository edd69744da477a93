//! `L^2` decay of the penalty error in `lambda` for right-hand sides of low regularity.

use std::sync::Arc;

use rayon::prelude::*;

use crate::analysis::cases::ExactSolutionCase;
use crate::analysis::fit::{fit_rate, RateFit, Window};
use crate::analysis::AnalysisError;
use crate::ansatz::FiniteElementFamily;
use crate::geometry::{build_mesh, difference, l2_norm};
use crate::solvers::solve_linear;
use crate::variational::PenalizedProblem;

/// Resolution of the finite-element oracle for `u_lambda`.
pub const ORACLE_RESOLUTION: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct LowRegularityReport {
    /// `(lambda, ||u_lambda,h - u*||_{L^2})`.
    pub points: Vec<(f64, f64)>,
    pub fit: RateFit,
}

impl LowRegularityReport {
    /// Decay exponent in `lambda` (the negated slope).
    pub fn rate(&self) -> f64 {
        -self.fit.slope
    }
}

/// Solves the penalized problem on a fine mesh for every `lambda` and fits the
/// `L^2` distance to the analytic `u*` over the whole grid.
pub fn low_regularity_rate_experiment(
    case: &ExactSolutionCase,
    lambdas: &[f64],
    resolution: usize,
) -> Result<LowRegularityReport, AnalysisError> {
    if lambdas.is_empty() {
        return Err(AnalysisError::Domain("empty lambda grid".into()));
    }
    let mesh = Arc::new(build_mesh(case.domain(), resolution)?);
    let fam = FiniteElementFamily::new(mesh.clone());
    let exact = case.u_star();
    let points = lambdas
        .par_iter()
        .map(|&lambda| {
            let p = PenalizedProblem::penalty(mesh.clone(), case.coefficient(), case.rhs(), lambda)?;
            let sol = solve_linear(&p, &fam)?;
            Ok((lambda, l2_norm(&difference(&sol.u, &exact), &mesh)))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let fit = fit_rate(&points, Window::All)?;
    Ok(LowRegularityReport { points, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::cases::CaseId;

    #[test]
    fn smooth_case_decays_like_inverse_lambda() {
        let r = low_regularity_rate_experiment(&CaseId::IntervalPoisson.case(), &[10.0, 100.0, 1000.0], 256).unwrap();
        assert!((r.rate() - 1.0).abs() < 1e-2, "{}", r.rate());
    }

    #[test]
    fn sign_flip_case_beats_the_half_rate() {
        let lambdas = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0];
        let case = CaseId::IntervalSignflip.case();
        let r = low_regularity_rate_experiment(&case, &lambdas, ORACLE_RESOLUTION).unwrap();
        assert!(r.rate() >= 0.5);
        // the finite-element oracle is nodally exact in 1D; compare with the closed form
        for &(l, e) in &r.points {
            let exact = case.penalty_gap_l2(l).unwrap();
            assert!((e - exact).abs() < 1e-3 * exact + 1e-6, "{l}: {e} vs {exact}");
        }
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(low_regularity_rate_experiment(&CaseId::IntervalSignflip.case(), &[], 8).is_err());
    }
}
