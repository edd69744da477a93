//! Discrete `L^2`, `H^1` and boundary `L^2` norms by quadrature.

use crate::geometry::function::DiscreteFunction;
use crate::geometry::mesh::{DomainMesh, Quadrature};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParts {
    pub l2_sq: f64,
    pub grad_sq: f64,
    pub boundary_sq: f64,
}

impl NormParts {
    pub fn h1(&self) -> f64 {
        (self.l2_sq + self.grad_sq).sqrt()
    }
}

/// Squared `L^2(Omega)` norm, squared gradient norm and squared trace norm in one pass.
pub fn norm_parts<U: DiscreteFunction + ?Sized>(u: &U, quad: &Quadrature) -> NormParts {
    let mut l2_sq = 0.0;
    let mut grad_sq = 0.0;
    for q in &quad.volume {
        let e = u.eval(&q.at);
        l2_sq += q.weight * e.value * e.value;
        grad_sq += q.weight * (e.grad[0] * e.grad[0] + e.grad[1] * e.grad[1]);
    }
    NormParts {
        l2_sq,
        grad_sq,
        boundary_sq: boundary_l2_sq(u, quad),
    }
}

pub fn boundary_l2_sq<U: DiscreteFunction + ?Sized>(u: &U, quad: &Quadrature) -> f64 {
    quad.boundary
        .iter()
        .map(|q| {
            let v = u.eval(&q.at).value;
            q.weight * v * v
        })
        .sum()
}

pub fn l2_norm<U: DiscreteFunction + ?Sized>(u: &U, mesh: &DomainMesh) -> f64 {
    mesh.quadrature()
        .volume
        .iter()
        .map(|q| {
            let v = u.eval(&q.at).value;
            q.weight * v * v
        })
        .sum::<f64>()
        .sqrt()
}

/// `(||u||_{L^2}^2 + ||grad u||_{L^2}^2)^{1/2}`.
pub fn h1_norm<U: DiscreteFunction + ?Sized>(u: &U, mesh: &DomainMesh) -> f64 {
    norm_parts(u, mesh.quadrature()).h1()
}

pub fn h1_seminorm<U: DiscreteFunction + ?Sized>(u: &U, mesh: &DomainMesh) -> f64 {
    norm_parts(u, mesh.quadrature()).grad_sq.sqrt()
}

/// `||tr u||_{L^2(boundary)}`; on the interval this is `(u(0)^2 + u(1)^2)^{1/2}`.
pub fn boundary_l2_norm<U: DiscreteFunction + ?Sized>(u: &U, mesh: &DomainMesh) -> f64 {
    boundary_l2_sq(u, mesh.quadrature()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::function::{Analytic, Constant, Eval};
    use crate::geometry::mesh::{build_mesh, DomainKind};
    use crate::geometry::Point;

    #[test]
    fn h1_of_identity_on_interval() {
        let m = build_mesh(DomainKind::Interval, 8).unwrap();
        let u = Analytic::new(DomainKind::Interval, |x: Point| Eval::new(x[0], [1.0, 0.0]));
        assert!((h1_norm(&u, &m) - (1.0_f64 / 3.0 + 1.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn h1_of_zero_and_dirichlet_solution() {
        let m = build_mesh(DomainKind::Interval, 8).unwrap();
        assert_eq!(h1_norm(&Constant(0.0), &m), 0.0);
        let u = Analytic::new(DomainKind::Interval, |x: Point| {
            Eval::new(0.5 * x[0] * (1.0 - x[0]), [0.5 - x[0], 0.0])
        });
        assert!((h1_norm(&u, &m) - (11.0_f64 / 120.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn boundary_norms() {
        let m = build_mesh(DomainKind::Interval, 4).unwrap();
        assert!((boundary_l2_norm(&Constant(-3.0), &m) - 3.0 * 2.0_f64.sqrt()).abs() < 1e-14);
        let bubble = Analytic::new(DomainKind::Interval, |x: Point| {
            Eval::new(x[0] * (1.0 - x[0]), [1.0 - 2.0 * x[0], 0.0])
        });
        assert_eq!(boundary_l2_norm(&bubble, &m), 0.0);

        let d = build_mesh(DomainKind::UnitDiskPolar, 16).unwrap();
        let rc = Analytic::new(DomainKind::UnitDiskPolar, |x: Point| Eval::new(x[0], [1.0, 0.0]));
        assert!((boundary_l2_norm(&rc, &d) - std::f64::consts::PI.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn smooth_h1_norm_converges_quadratically_on_disk() {
        // 3-point Gauss in theta is exact to degree 5; the residual error comes from r-integration of x^2 e^{...}
        let u = Analytic::new(DomainKind::UnitDiskPolar, |x: Point| {
            let e = (x[0] + 0.5 * x[1]).exp();
            Eval::new(e, [e, 0.5 * e])
        });
        let norms: Vec<f64> = [4, 8, 16]
            .iter()
            .map(|&n| h1_norm(&u, &build_mesh(DomainKind::UnitDiskPolar, n).unwrap()))
            .collect();
        let d1 = (norms[1] - norms[0]).abs();
        let d2 = (norms[2] - norms[1]).abs();
        // at least O(h^2) decay of the refinement increments
        assert!(d2 <= d1 / 3.5 || d2 < 1e-13, "{d1} {d2}");
    }
}
