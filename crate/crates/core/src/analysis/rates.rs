//! Decay exponents of the error bound under penalty schedules `lambda ~ n^sigma`.
//!
//! `r` is the approximation rate of the family and `s` the rate at which the
//! optimization gap is driven to zero.

use crate::analysis::AnalysisError;

fn check(r: f64, s: f64) -> Result<(), AnalysisError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(AnalysisError::Domain(format!("r must be positive, got {r}")));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(AnalysisError::Domain(format!("s must be positive, got {s}")));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<(), AnalysisError> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(AnalysisError::Domain(format!("sigma must be nonnegative, got {sigma}")));
    }
    Ok(())
}

/// `min(r, s - sigma/2, sigma)`.
pub fn rho_uniform(sigma: f64, r: f64, s: f64) -> Result<f64, AnalysisError> {
    check(r, s)?;
    check_sigma(sigma)?;
    Ok(r.min(s - sigma / 2.0).min(sigma))
}

/// `(2s/3, min(2s/3, r))`.
pub fn rho_star_uniform(r: f64, s: f64) -> Result<(f64, f64), AnalysisError> {
    check(r, s)?;
    let sigma = 2.0 * s / 3.0;
    Ok((sigma, sigma.min(r)))
}

/// `min(r, s - sigma/2, sigma/2)`.
pub fn rho_nonuniform(sigma: f64, r: f64, s: f64) -> Result<f64, AnalysisError> {
    check(r, s)?;
    check_sigma(sigma)?;
    Ok(r.min(s - sigma / 2.0).min(sigma / 2.0))
}

/// `(s, min(s/2, r))`.
pub fn rho_star_nonuniform(r: f64, s: f64) -> Result<(f64, f64), AnalysisError> {
    check(r, s)?;
    Ok((s, (s / 2.0).min(r)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Uniform,
    Nonuniform,
}

impl Scenario {
    pub fn rho(self, sigma: f64, r: f64, s: f64) -> Result<f64, AnalysisError> {
        match self {
            Scenario::Uniform => rho_uniform(sigma, r, s),
            Scenario::Nonuniform => rho_nonuniform(sigma, r, s),
        }
    }

    pub fn optimum(self, r: f64, s: f64) -> Result<(f64, f64), AnalysisError> {
        match self {
            Scenario::Uniform => rho_star_uniform(r, s),
            Scenario::Nonuniform => rho_star_nonuniform(r, s),
        }
    }
}

/// Largest violation of midpoint concavity of `rho` on `grid`, and the largest
/// second difference on the grid away from kinks (zero for piecewise-linear curves).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport {
    pub concavity_violation: f64,
    pub kink_count: usize,
    pub argmax: f64,
    pub max: f64,
}

pub fn curve_shape(scenario: Scenario, r: f64, s: f64, grid: &[f64]) -> Result<ShapeReport, AnalysisError> {
    let values = grid
        .iter()
        .map(|&g| scenario.rho(g, r, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut violation: f64 = 0.0;
    let mut kinks = 0;
    for i in 1..grid.len().saturating_sub(1) {
        let (h0, h1) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
        let interp = (values[i - 1] * h1 + values[i + 1] * h0) / (h0 + h1);
        let defect = interp - values[i];
        violation = violation.max(defect);
        if defect < -1e-12 * (1.0 + values[i].abs()) {
            kinks += 1;
        }
    }
    let (mut argmax, mut max) = (grid[0], values[0]);
    for (&g, &v) in grid.iter().zip(&values) {
        if v > max {
            argmax = g;
            max = v;
        }
    }
    Ok(ShapeReport {
        concavity_violation: violation,
        kink_count: kinks,
        argmax,
        max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn finite_element_values() {
        assert_eq!(rho_uniform(1.0, 1.0, 1.5).unwrap(), 1.0);
        assert_eq!(rho_uniform(0.5, 1.0, 1.5).unwrap(), 0.5);
        assert_eq!(rho_star_uniform(1.0, 1.5).unwrap(), (1.0, 1.0));
        assert_eq!(rho_nonuniform(1.5, 1.0, 1.5).unwrap(), 0.75);
        assert_eq!(rho_nonuniform(0.0, 3.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn network_exponent() {
        let (r, d) = (1.0, 2.0);
        let (rt, st) = ((r + 1.0) / d, (2.0 * r + 3.0) / (2.0 * d));
        assert_eq!(rho_nonuniform(st, rt, st).unwrap(), (2.0 * r + 3.0) / (4.0 * d));
        assert_eq!(rho_star_nonuniform(rt, st).unwrap(), (st, 0.625));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(rho_uniform(1.0, 0.0, 1.0).is_err());
        assert!(rho_uniform(1.0, 1.0, -1.0).is_err());
        assert!(rho_nonuniform(-0.1, 1.0, 1.0).is_err());
        assert!(rho_star_nonuniform(f64::NAN, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn optimum_is_attained_and_maximal(r in 0.01f64..5.0, extra in 0.0f64..5.0) {
            let s = r + extra;
            let (sig, rho) = rho_star_nonuniform(r, s).unwrap();
            prop_assert_eq!(rho_nonuniform(sig, r, s).unwrap(), rho);
            let (sig_u, rho_u) = rho_star_uniform(r, s).unwrap();
            let at = rho_uniform(sig_u, r, s).unwrap();
            prop_assert!((at - rho_u).abs() <= 4.0 * f64::EPSILON * rho_u);
            let grid: Vec<f64> = (0..100).map(|i| 3.0 * s * i as f64 / 99.0).collect();
            for sc in [Scenario::Uniform, Scenario::Nonuniform] {
                let shape = curve_shape(sc, r, s, &grid).unwrap();
                prop_assert!(shape.concavity_violation <= 1e-12);
                prop_assert!(shape.kink_count <= 4);
                prop_assert!(shape.max <= sc.optimum(r, s).unwrap().1 * (1.0 + 1e-12));
            }
        }
    }
}
