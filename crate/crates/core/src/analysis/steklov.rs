//! Steklov eigenpairs of the Laplacian on the unit disk and the penalty-gap
//! solution formula built on them.
//!
//! With `a1(u, v) = int grad u . grad v dx + int_{boundary} u v ds` the modes
//! `e_0 = (2 pi)^{-1/2}`, `e = Re z^k / sqrt(pi (k+1))`, `e = Im z^k / sqrt(pi (k+1))`
//! are `a1`-orthonormal, harmonic, and satisfy `d_r e = k e` on the circle.

use std::f64::consts::PI;

use crate::analysis::cases::ExactSolutionCase;
use crate::analysis::AnalysisError;
use crate::geometry::{DiscreteFunction, DomainKind, DomainMesh, Eval, Located, Point};
use crate::variational::CoefficientField;

pub const DEFAULT_MODE_COUNT: usize = 32;

/// Tail estimates above this trigger a warning in [`penalty_gap_via_formula`].
pub const TAIL_WARNING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeShape {
    Constant,
    Cos,
    Sin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteklovMode {
    pub index: usize,
    /// Angular frequency `k`.
    pub frequency: u32,
    pub shape: ModeShape,
    /// `mu_j = k`.
    pub eigenvalue: f64,
    /// Factor turning `Re z^k` (or `Im z^k`, or `1`) into an `a1`-unit vector.
    pub normalization: f64,
}

impl SteklovMode {
    fn new(index: usize) -> Self {
        if index == 0 {
            return SteklovMode {
                index,
                frequency: 0,
                shape: ModeShape::Constant,
                eigenvalue: 0.0,
                normalization: 1.0 / (2.0 * PI).sqrt(),
            };
        }
        let k = (index + 1) / 2;
        SteklovMode {
            index,
            frequency: k as u32,
            shape: if index % 2 == 1 { ModeShape::Cos } else { ModeShape::Sin },
            eigenvalue: k as f64,
            normalization: 1.0 / (PI * (k as f64 + 1.0)).sqrt(),
        }
    }

    pub fn at(&self, x: Point) -> Eval {
        if self.shape == ModeShape::Constant {
            return Eval::new(self.normalization, [0.0, 0.0]);
        }
        let k = self.frequency;
        // z^{k-1} by repeated multiplication
        let (mut re, mut im) = (1.0, 0.0);
        for _ in 1..k {
            (re, im) = (re * x[0] - im * x[1], re * x[1] + im * x[0]);
        }
        let (zr, zi) = (re * x[0] - im * x[1], re * x[1] + im * x[0]);
        let kf = k as f64 * self.normalization;
        match self.shape {
            ModeShape::Cos => Eval::new(self.normalization * zr, [kf * re, -kf * im]),
            ModeShape::Sin => Eval::new(self.normalization * zi, [kf * im, kf * re]),
            ModeShape::Constant => unreachable!(),
        }
    }

    /// Boundary values `e_j(cos t, sin t)`.
    pub fn on_circle(&self, theta: f64) -> f64 {
        let k = self.frequency as f64;
        self.normalization
            * match self.shape {
                ModeShape::Constant => 1.0,
                ModeShape::Cos => (k * theta).cos(),
                ModeShape::Sin => (k * theta).sin(),
            }
    }
}

impl DiscreteFunction for SteklovMode {
    fn eval(&self, at: &Located) -> Eval {
        self.at(at.x)
    }

    fn domain_kind(&self) -> Option<DomainKind> {
        Some(DomainKind::UnitDiskPolar)
    }
}

/// First `count` modes, ordered `0, 1, 1, 2, 2, ...` by eigenvalue (cosine before sine).
pub fn steklov_modes_disk(count: usize, coefficient: &CoefficientField) -> Result<Vec<SteklovMode>, AnalysisError> {
    if !coefficient.is_identity() {
        return Err(AnalysisError::Unsupported(format!(
            "analytic Steklov modes need the identity coefficient, got {coefficient}"
        )));
    }
    if count == 0 {
        return Err(AnalysisError::Domain("at least one mode is required".into()));
    }
    Ok((0..count).map(SteklovMode::new).collect())
}

fn require_disk(mesh: &DomainMesh) -> Result<(), AnalysisError> {
    if mesh.kind != DomainKind::UnitDiskPolar {
        return Err(AnalysisError::Unsupported(format!(
            "Steklov machinery lives on the unit disk, got {}",
            mesh.kind
        )));
    }
    Ok(())
}

/// `a1(u, v)` under the mesh quadrature.
pub fn a1_inner<U, V>(u: &U, v: &V, mesh: &DomainMesh) -> f64
where
    U: DiscreteFunction + ?Sized,
    V: DiscreteFunction + ?Sized,
{
    let quad = mesh.quadrature();
    let vol: f64 = quad
        .volume
        .iter()
        .map(|q| {
            let (a, b) = (u.eval(&q.at), v.eval(&q.at));
            q.weight * (a.grad[0] * b.grad[0] + a.grad[1] * b.grad[1])
        })
        .sum();
    let bdry: f64 = quad
        .boundary
        .iter()
        .map(|q| q.weight * u.eval(&q.at).value * v.eval(&q.at).value)
        .sum();
    vol + bdry
}

/// `G_ij = a1(e_i, e_j)`.
pub fn gram_matrix(modes: &[SteklovMode], mesh: &DomainMesh) -> Vec<Vec<f64>> {
    modes
        .iter()
        .map(|ei| modes.iter().map(|ej| a1_inner(ei, ej, mesh)).collect())
        .collect()
}

/// `max |G - I|`.
pub fn orthonormality_defect(modes: &[SteklovMode], mesh: &DomainMesh) -> f64 {
    let g = gram_matrix(modes, mesh);
    let mut worst: f64 = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

/// `a(e, phi) - mu int_{boundary} e phi ds`, which vanishes for every `phi` in `H^1`.
pub fn eigen_residual<P: DiscreteFunction + ?Sized>(mode: &SteklovMode, phi: &P, mesh: &DomainMesh) -> f64 {
    let quad = mesh.quadrature();
    let vol: f64 = quad
        .volume
        .iter()
        .map(|q| {
            let (a, b) = (mode.eval(&q.at), phi.eval(&q.at));
            q.weight * (a.grad[0] * b.grad[0] + a.grad[1] * b.grad[1])
        })
        .sum();
    let bdry: f64 = quad
        .boundary
        .iter()
        .map(|q| q.weight * mode.eval(&q.at).value * phi.eval(&q.at).value)
        .sum();
    vol - mode.eigenvalue * bdry
}

/// `c_j = (1 + mu_j) int_{boundary} w e_j ds`.
///
/// These are the `a1`-Fourier coefficients of `w` when `w` is harmonic; that is
/// the caller's responsibility.
pub fn fourier_coeffs<W: DiscreteFunction + ?Sized>(
    w: &W,
    modes: &[SteklovMode],
    mesh: &DomainMesh,
) -> Result<Vec<f64>, AnalysisError> {
    require_disk(mesh)?;
    let quad = mesh.quadrature();
    let traces: Vec<(f64, f64, Point)> = quad
        .boundary
        .iter()
        .map(|q| (q.weight, w.eval(&q.at).value, q.at.x))
        .collect();
    Ok(modes
        .iter()
        .map(|e| {
            let s: f64 = traces.iter().map(|&(wq, v, x)| wq * v * e.at(x).value).sum();
            (1.0 + e.eigenvalue) * s
        })
        .collect())
}

/// Truncated expansion `(1/lambda) sum_j c(lambda)_j e_j` of `v_lambda = u* - u_lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub lambda: f64,
    pub modes: Vec<SteklovMode>,
    /// `c(lambda)_j`.
    pub coeffs: Vec<f64>,
    /// `max |c(lambda)_j| / lambda` over the highest retained frequency.
    pub tail_estimate: f64,
    pub warning: Option<String>,
}

impl Reconstruction {
    pub fn at(&self, x: Point) -> Eval {
        let mut out = Eval::zero();
        for (e, c) in self.modes.iter().zip(&self.coeffs) {
            if *c == 0.0 {
                continue;
            }
            let v = e.at(x);
            let t = c / self.lambda;
            out.value += t * v.value;
            out.grad[0] += t * v.grad[0];
            out.grad[1] += t * v.grad[1];
        }
        out
    }
}

impl DiscreteFunction for Reconstruction {
    fn eval(&self, at: &Located) -> Eval {
        self.at(at.x)
    }

    fn domain_kind(&self) -> Option<DomainKind> {
        Some(DomainKind::UnitDiskPolar)
    }
}

/// `c(lambda)_j = (1 + mu_j) / (1 + mu_j / lambda) int_{boundary} (dA u*) e_j ds`, with the
/// boundary integral taken by the mesh quadrature.
pub fn penalty_gap_via_formula(
    case: &ExactSolutionCase,
    lambda: f64,
    count: usize,
    mesh: &DomainMesh,
) -> Result<Reconstruction, AnalysisError> {
    require_disk(mesh)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(AnalysisError::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if case.boundary_flux(0.0).is_none() {
        return Err(AnalysisError::Unsupported(format!(
            "{} has no analytic boundary flux on the disk",
            case.id
        )));
    }
    let modes = steklov_modes_disk(count, &case.coefficient())?;
    let quad = mesh.quadrature();
    let flux: Vec<(f64, f64, f64)> = quad
        .boundary
        .iter()
        .map(|q| {
            let theta = q.at.x[1].atan2(q.at.x[0]);
            (q.weight, theta, case.boundary_flux(theta).unwrap())
        })
        .collect();
    let coeffs: Vec<f64> = modes
        .iter()
        .map(|e| {
            let raw: f64 = flux.iter().map(|&(w, t, g)| w * g * e.on_circle(t)).sum();
            (1.0 + e.eigenvalue) / (1.0 + e.eigenvalue / lambda) * raw
        })
        .collect();
    let top = modes.last().map_or(0, |m| m.frequency);
    let tail_estimate = modes
        .iter()
        .zip(&coeffs)
        .filter(|(m, _)| m.frequency == top)
        .map(|(_, c)| c.abs() / lambda)
        .fold(0.0, f64::max);
    let warning = (tail_estimate > TAIL_WARNING).then(|| {
        format!("truncation at {count} modes may be too coarse: last retained coefficient gives tail {tail_estimate:.3e}")
    });
    Ok(Reconstruction {
        lambda,
        modes,
        coeffs,
        tail_estimate,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::cases::CaseId;
    use crate::ansatz::FiniteElementFamily;
    use crate::geometry::{build_mesh, build_mesh_with_order, difference, h1_norm, Constant};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn fine_disk() -> DomainMesh {
        build_mesh_with_order(DomainKind::UnitDiskPolar, 8, 12).unwrap()
    }

    #[test]
    fn mode_ordering_and_constants() {
        let m = steklov_modes_disk(1, &CoefficientField::Identity).unwrap();
        assert_eq!(m[0].eigenvalue, 0.0);
        assert!((m[0].normalization - (2.0 * PI).powf(-0.5)).abs() < 1e-16);
        let m = steklov_modes_disk(5, &CoefficientField::Identity).unwrap();
        let mus: Vec<f64> = m.iter().map(|e| e.eigenvalue).collect();
        assert_eq!(mus, vec![0.0, 1.0, 1.0, 2.0, 2.0]);
        assert!(steklov_modes_disk(3, &CoefficientField::SmoothAnisotropic).is_err());
        assert!(steklov_modes_disk(0, &CoefficientField::Identity).is_err());
    }

    #[test]
    fn modes_match_polar_form() {
        let m = steklov_modes_disk(9, &CoefficientField::Identity).unwrap();
        for e in &m[1..] {
            let (r, t) = (0.7f64, 1.1f64);
            let k = e.frequency as f64;
            let polar = r.powf(k)
                * match e.shape {
                    ModeShape::Cos => (k * t).cos(),
                    _ => (k * t).sin(),
                }
                * e.normalization;
            let v = e.at([r * t.cos(), r * t.sin()]);
            assert!((v.value - polar).abs() < 1e-14);
        }
        let mesh = build_mesh(DomainKind::UnitDiskPolar, 4).unwrap();
        let pts: Vec<Point> = (0..20).map(|i| [0.3 * (i as f64).cos() * 0.9, 0.3 * (i as f64).sin()]).collect();
        for e in &m {
            assert!(crate::geometry::check_gradient_field(e, &mesh, &pts, 1e-6) < 1e-7);
        }
    }

    #[test]
    fn gram_matrix_is_identity() {
        let mesh = fine_disk();
        let modes = steklov_modes_disk(10, &CoefficientField::Identity).unwrap();
        assert!(orthonormality_defect(&modes, &mesh) < 1e-10);
    }

    #[test]
    fn eigen_residual_vanishes_against_random_fe_functions() {
        let mesh = Arc::new(fine_disk());
        let fam = FiniteElementFamily::new(mesh.clone());
        let modes = steklov_modes_disk(7, &CoefficientField::Identity).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let phi = fam.random(&mut rng, 1.0);
            for e in &modes {
                assert!(eigen_residual(e, &phi, &mesh).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn fourier_coefficients_of_simple_harmonics() {
        let mesh = fine_disk();
        let modes = steklov_modes_disk(5, &CoefficientField::Identity).unwrap();
        let c = fourier_coeffs(&Constant(1.0), &modes, &mesh).unwrap();
        assert!((c[0] - (2.0 * PI).sqrt()).abs() < 1e-10);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-10));
        let x = crate::geometry::Analytic::anywhere(|p: Point| Eval::new(p[0], [1.0, 0.0]));
        let c = fourier_coeffs(&x, &modes, &mesh).unwrap();
        assert!((c[1] - (2.0 * PI).sqrt()).abs() < 1e-10);
        assert!(c[0].abs() < 1e-10 && c[2].abs() < 1e-10);
        let c = fourier_coeffs(&Constant(0.0), &modes, &mesh).unwrap();
        assert!(c.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn radial_case_excites_only_the_constant_mode() {
        let mesh = fine_disk();
        let case = CaseId::DiskRadial.case();
        let rec = penalty_gap_via_formula(&case, 10.0, 1, &mesh).unwrap();
        assert!((rec.coeffs[0] + (2.0 * PI).sqrt() / 2.0).abs() < 1e-12);
        for p in [[0.0, 0.0], [0.5, -0.2], [0.9, 0.1]] {
            assert!((rec.at(p).value + 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn mode1_case_excites_only_the_first_cosine() {
        let mesh = fine_disk();
        let case = CaseId::DiskMode1.case();
        let rec = penalty_gap_via_formula(&case, 4.0, 3, &mesh).unwrap();
        assert!((rec.coeffs[1] + 1.6 * (2.0 * PI).sqrt()).abs() < 1e-10);
        let d = difference(&rec, case.v_lambda(4.0).unwrap());
        assert!(h1_norm(&d, &mesh) < 1e-10);
        let far = penalty_gap_via_formula(&case, 1e6, 3, &mesh).unwrap();
        let g = h1_norm(&far, &mesh);
        assert!((g - case.penalty_gap(1e6).unwrap()).abs() < 1e-12 && g < 4e-6, "{g}");
    }

    #[test]
    fn coefficients_are_damped_versions_of_the_flux_moments() {
        let mesh = fine_disk();
        for id in [CaseId::DiskRadial, CaseId::DiskMode1] {
            let case = id.case();
            let undamped = penalty_gap_via_formula(&case, f64::MAX, 9, &mesh).unwrap();
            for lambda in [0.5, 1.0, 10.0, 100.0] {
                let rec = penalty_gap_via_formula(&case, lambda, 9, &mesh).unwrap();
                for (c, u) in rec.coeffs.iter().zip(&undamped.coeffs) {
                    assert!(c.abs() <= u.abs() + 1e-14);
                }
            }
        }
    }

    #[test]
    fn truncation_warning_reports_the_tail() {
        let mesh = fine_disk();
        let case = CaseId::DiskMode1.case();
        // K = 2 keeps the exciting mode as the top frequency, so the tail estimate is large
        let rec = penalty_gap_via_formula(&case, 4.0, 2, &mesh).unwrap();
        assert!(rec.warning.is_some() && rec.tail_estimate > 0.1);
        let rec = penalty_gap_via_formula(&case, 4.0, 5, &mesh).unwrap();
        assert!(rec.warning.is_none());
        let square = build_mesh(DomainKind::UnitSquare, 4).unwrap();
        assert!(penalty_gap_via_formula(&case, 4.0, 5, &square).is_err());
        assert!(penalty_gap_via_formula(&CaseId::IntervalPoisson.case(), 4.0, 5, &mesh).is_err());
    }
}
