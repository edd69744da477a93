//! Measurable forms of the structural facts behind the error estimates:
//! norm equivalence, coercivity, the quadratic expansion of the energy,
//! the Céa bound and the `a1`-orthogonal splitting `H^1 = H^1_0 + harmonic`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ansatz::{FeFunction, FiniteElementFamily};
use crate::geometry::{norm_parts, Analytic, DiscreteFunction, DomainKind, DomainMesh, Eval, Point};
use crate::solvers::sparse::{reverse_cuthill_mckee, EnvelopeCholesky, SparseSymmetric};
use crate::solvers::{assemble, solve_linear, SolverError};
use crate::variational::{bilinear_a_lambda, energy, CoefficientField, PenalizedProblem, RightHandSide};

/// `||u||_{H^1}^2 / (||grad u||^2 + ||u||_{L^2(boundary)}^2)`.
pub fn friedrich_ratio<U: DiscreteFunction + ?Sized>(u: &U, mesh: &DomainMesh) -> f64 {
    let p = norm_parts(u, mesh.quadrature());
    (p.l2_sq + p.grad_sq) / (p.grad_sq + p.boundary_sq)
}

/// Random finite-element probes: noise around a constant offset, so that both
/// rough and near-constant functions are seen.
pub fn probe_functions(mesh: &Arc<DomainMesh>, samples: usize, seed: u64) -> Vec<FeFunction> {
    let fam = FiniteElementFamily::new(mesh.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|i| {
            let noise = fam.random(&mut rng, 1.0);
            let shift = (i % 7) as f64;
            let coeffs = noise.coeffs.iter().map(|c| 0.1 * c + shift).collect();
            fam.function(coeffs).expect("one coefficient per node")
        })
        .collect()
}

/// Largest [`friedrich_ratio`] over [`probe_functions`].
pub fn empirical_friedrich_sup(mesh: &Arc<DomainMesh>, samples: usize, seed: u64) -> f64 {
    probe_functions(mesh, samples, seed)
        .iter()
        .map(|u| friedrich_ratio(u, mesh))
        .fold(0.0, f64::max)
}

/// `sqrt(2 delta / alpha + inf_term / alpha)`.
pub fn cea_bound(delta: f64, alpha: f64, inf_term: f64) -> f64 {
    ((2.0 * delta + inf_term) / alpha).sqrt()
}

/// `-u'' + u = f` on (0,1) with natural boundary, solved by `u* = x^2 (1-x)^2`.
pub fn neumann_problem(resolution: usize) -> Result<(PenalizedProblem, impl DiscreteFunction), crate::geometry::GeometryError> {
    let mesh = Arc::new(crate::geometry::build_mesh(DomainKind::Interval, resolution)?);
    // u'' = 2 - 12x + 12x^2
    let rhs = RightHandSide::new("x^2(1-x)^2 - (2 - 12x + 12x^2)", |x: Point| {
        let t = x[0];
        t * t * (1.0 - t) * (1.0 - t) - (2.0 - 12.0 * t + 12.0 * t * t)
    });
    let p = PenalizedProblem::natural(mesh, CoefficientField::Identity, rhs, true);
    let exact = Analytic::new(DomainKind::Interval, |x: Point| {
        let t = x[0];
        Eval::new(t * t * (1.0 - t) * (1.0 - t), [2.0 * t * (1.0 - t) * (1.0 - 2.0 * t), 0.0])
    });
    Ok((p, exact))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CeaSample {
    /// `||v - u*||_{H^1}`.
    pub distance: f64,
    pub delta: f64,
    /// `||u_h - u*||_a^2`, the infimum over the family.
    pub inf_term: f64,
    pub bound: f64,
}

impl CeaSample {
    pub fn holds(&self, slack: f64) -> bool {
        self.distance <= self.bound + slack
    }
}

/// Céa's bound for `samples` random candidates around the Galerkin solution of [`neumann_problem`].
pub fn cea_suite(resolution: usize, samples: usize, seed: u64) -> Result<Vec<CeaSample>, SolverError> {
    let (p, exact) = neumann_problem(resolution).map_err(|e| SolverError::Singular(e.to_string()))?;
    let fam = FiniteElementFamily::new(p.mesh.clone());
    let sol = solve_linear(&p, &fam)?;
    let quad = p.mesh.quadrature();
    let sq_dist = |v: &FeFunction| {
        let parts = norm_parts(&crate::geometry::difference(v, &exact), quad);
        parts.l2_sq + parts.grad_sq
    };
    let inf_term = sq_dist(&sol.u);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..samples)
        .map(|i| {
            let scale = 10f64.powi(-(i as i32 % 4));
            let v = fam.random(&mut rng, scale).axpy(1.0, &sol.u);
            let delta = energy(&p, &v) - sol.energy;
            CeaSample {
                distance: sq_dist(&v).sqrt(),
                delta,
                inf_term,
                bound: cea_bound(delta, 1.0, inf_term),
            }
        })
        .collect())
}

/// `|E(u_h + h) - E(u_h) - a_lambda(h, h)/2|` for `samples` random `h`, relative to `1 + |E(u_h)|`.
pub fn quadratic_expansion_defect(p: &PenalizedProblem, samples: usize, seed: u64) -> Result<f64, SolverError> {
    let fam = FiniteElementFamily::new(p.mesh.clone());
    let sol = solve_linear(p, &fam)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let h = fam.random(&mut rng, 1.0);
        let lhs = energy(p, &sol.u.axpy(1.0, &h)) - sol.energy;
        let quadratic = match bilinear_a_lambda(p, &h, &h) {
            Ok(v) => v,
            Err(_) => crate::variational::bilinear_a(p, &h, &h),
        };
        worst = worst.max((lhs - 0.5 * quadratic).abs() / (1.0 + sol.energy.abs()));
    }
    Ok(worst)
}

/// Smallest `a_lambda(u,u) / ||u||_{H^1}^2` over [`probe_functions`].
pub fn coercivity_ratio(p: &PenalizedProblem, samples: usize, seed: u64) -> f64 {
    probe_functions(&p.mesh, samples, seed)
        .iter()
        .map(|u| {
            let parts = norm_parts(u, p.mesh.quadrature());
            let a = crate::variational::bilinear_a(p, u, u) + p.boundary_weight() * parts.boundary_sq;
            a / (parts.l2_sq + parts.grad_sq)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Splits a finite-element `u` into `u_0` (zero trace) and the discrete harmonic
/// part `u - u_0`, where `a(u_0, phi) = a(u, phi)` for all zero-trace `phi`.
pub fn orthogonal_decomposition(u: &FeFunction) -> Result<(FeFunction, FeFunction), SolverError> {
    let mesh = u.mesh().clone();
    let fam = FiniteElementFamily::new(mesh.clone());
    let p = PenalizedProblem::natural(mesh, CoefficientField::Identity, RightHandSide::constant(0.0), false);
    let k = assemble(&p, &fam).matrix;
    let boundary = fam.boundary_nodes();
    let interior: Vec<usize> = (0..fam.dof_count()).filter(|&i| !boundary[i]).collect();
    let mut local = vec![usize::MAX; fam.dof_count()];
    for (li, &gi) in interior.iter().enumerate() {
        local[gi] = li;
    }
    let mut triplets = Vec::new();
    for &gi in &interior {
        for (gj, v) in k.row(gi) {
            if local[gj] != usize::MAX {
                triplets.push((local[gi], local[gj], v));
            }
        }
    }
    let kii = SparseSymmetric::from_triplets(interior.len(), triplets);
    let ku = k.matvec(&u.coeffs);
    let rhs: Vec<f64> = interior.iter().map(|&i| ku[i]).collect();
    let chol = EnvelopeCholesky::factor(&kii, reverse_cuthill_mckee(&kii))?;
    let c0 = chol.solve(&rhs);
    let mut coeffs = vec![0.0; fam.dof_count()];
    for (li, &gi) in interior.iter().enumerate() {
        coeffs[gi] = c0[li];
    }
    let zero_trace = fam.function(coeffs).expect("one coefficient per node");
    let harmonic = u.axpy(-1.0, &zero_trace);
    Ok((zero_trace, harmonic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::steklov::{a1_inner, steklov_modes_disk};
    use crate::ansatz::fe_interpolate;
    use crate::geometry::{build_mesh, build_mesh_with_order, h1_norm};
    use rand::Rng;

    #[test]
    fn friedrich_ratio_is_finite_and_stable_under_refinement() {
        for kind in [DomainKind::Interval, DomainKind::UnitSquare, DomainKind::UnitDiskPolar] {
            let coarse = empirical_friedrich_sup(&Arc::new(build_mesh(kind, 4).unwrap()), 500, 1);
            let fine = empirical_friedrich_sup(&Arc::new(build_mesh(kind, 8).unwrap()), 500, 1);
            assert!(coarse.is_finite() && fine.is_finite() && coarse > 0.0);
            assert!((fine / coarse - 1.0).abs() < 0.5, "{kind}: {coarse} vs {fine}");
        }
    }

    #[test]
    fn coercivity_with_measured_constant() {
        for kind in [DomainKind::Interval, DomainKind::UnitSquare, DomainKind::UnitDiskPolar] {
            let mesh = Arc::new(build_mesh(kind, 6).unwrap());
            let alpha1 = 1.0 / empirical_friedrich_sup(&mesh, 500, 3);
            for lambda in [1.0, 5.0, 50.0] {
                let p = PenalizedProblem::penalty(mesh.clone(), CoefficientField::Identity, RightHandSide::constant(1.0), lambda)
                    .unwrap();
                // a_lambda >= a_1 for lambda >= 1, and a_1 >= alpha1 ||.||^2 on the probed set
                assert!(coercivity_ratio(&p, 500, 3) >= alpha1 * (1.0 - 1e-12), "{kind} {lambda}");
            }
        }
    }

    #[test]
    fn quadratic_expansion_is_exact() {
        for kind in [DomainKind::Interval, DomainKind::UnitSquare, DomainKind::UnitDiskPolar] {
            let mesh = Arc::new(build_mesh(kind, 5).unwrap());
            let p = PenalizedProblem::penalty(mesh, CoefficientField::SmoothAnisotropic, RightHandSide::constant(1.0), 7.0)
                .unwrap();
            assert!(quadratic_expansion_defect(&p, 20, 9).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn cea_identity_on_the_neumann_problem() {
        let samples = cea_suite(32, 100, 5).unwrap();
        for s in &samples {
            assert!(s.holds(1e-12));
            assert!((s.distance - s.bound).abs() <= 1e-9, "{s:?}");
        }
        assert!(samples[0].inf_term > 0.0);
    }

    #[test]
    fn orthogonal_decomposition_on_the_disk() {
        let mesh = Arc::new(build_mesh_with_order(DomainKind::UnitDiskPolar, 16, 4).unwrap());
        let fam = FiniteElementFamily::new(mesh.clone());
        let modes = steklov_modes_disk(7, &CoefficientField::Identity).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..3 {
            let a: Vec<f64> = modes.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            let harmonic = fe_interpolate(&fam, |x| modes.iter().zip(&a).map(|(e, c)| c * e.at(x).value).sum());
            let mut bubble = fam.random(&mut rng, 0.3);
            for (c, b) in bubble.coeffs.iter_mut().zip(fam.boundary_nodes()) {
                if b {
                    *c = 0.0;
                }
            }
            let u = harmonic.axpy(1.0, &bubble);
            let (u0, uh) = orthogonal_decomposition(&u).unwrap();
            assert!(a1_inner(&u0, &uh, &mesh).abs() < 1e-9);
            // the harmonic part is the a1-projection onto the modes, up to the FE error
            let proj: Vec<f64> = modes.iter().map(|e| a1_inner(&u, e, &mesh)).collect();
            for (p, c) in proj.iter().zip(&a) {
                assert!((p - c).abs() < 0.05, "{p} vs {c}");
            }
            let recon = crate::geometry::Analytic::anywhere(|x: Point| {
                let mut out = Eval::zero();
                for (e, c) in modes.iter().zip(&proj) {
                    let v = e.at(x);
                    out.value += c * v.value;
                    out.grad[0] += c * v.grad[0];
                    out.grad[1] += c * v.grad[1];
                }
                out
            });
            let rest = crate::geometry::difference(&uh, &recon);
            assert!(h1_norm(&rest, &mesh) < 0.05 * h1_norm(&u, &mesh));
        }
    }
}
