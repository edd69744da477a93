//! Exact minimization of the penalized energy over a finite-element space.

use crate::ansatz::{FeFunction, FiniteElementFamily};
use crate::solvers::sparse::{norm, pcg_jacobi, reverse_cuthill_mckee, EnvelopeCholesky, SparseSymmetric};
use crate::solvers::SolverError;
use crate::tolerances::TOLERANCES;
use crate::variational::{energy, BoundaryMode, PenalizedProblem};

/// `K_lambda c = F` with `(K_lambda)_ij = a_lambda(phi_i, phi_j)` and `F_i = int f phi_i`.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub matrix: SparseSymmetric,
    pub load: Vec<f64>,
    pub dof_count: usize,
}

pub fn assemble(p: &PenalizedProblem, fam: &FiniteElementFamily) -> GalerkinSystem {
    let mesh = &fam.mesh;
    let n = fam.dof_count();
    let quad = mesh.quadrature();
    let mut triplets = Vec::with_capacity(quad.volume.len() * 16);
    let mut load = vec![0.0; n];
    for q in &quad.volume {
        let cell = q.at.cell.expect("mesh quadrature points carry their cell");
        let s = mesh.shape(cell, q.at.local);
        let f = p.rhs.eval(q.at.x);
        for a in 0..s.count {
            let ag = p.coefficient.apply(q.at.x, s.grads[a]);
            load[s.nodes[a]] += q.weight * f * s.values[a];
            for b in 0..s.count {
                let mut v = ag[0] * s.grads[b][0] + ag[1] * s.grads[b][1];
                if p.mass_term {
                    v += s.values[a] * s.values[b];
                }
                triplets.push((s.nodes[a], s.nodes[b], q.weight * v));
            }
        }
    }
    let lambda = p.boundary_weight();
    if lambda > 0.0 {
        for q in &quad.boundary {
            let s = mesh.shape(q.at.cell.expect("boundary points carry their cell"), q.at.local);
            for a in 0..s.count {
                for b in 0..s.count {
                    let v = lambda * q.weight * s.values[a] * s.values[b];
                    if v != 0.0 {
                        triplets.push((s.nodes[a], s.nodes[b], v));
                    }
                }
            }
        }
    }
    GalerkinSystem {
        matrix: SparseSymmetric::from_triplets(n, triplets),
        load,
        dof_count: n,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearMethod {
    /// Envelope Cholesky under reverse Cuthill-McKee ordering.
    Cholesky { stored_entries: usize },
    /// Jacobi-preconditioned CG, used when the envelope exceeds the memory budget.
    ConjugateGradient { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Largest Cholesky envelope (stored `f64`s) before switching to CG.
    pub max_envelope: usize,
    pub force_cg: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_envelope: 40_000_000,
            force_cg: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub u: FeFunction,
    /// `E_lambda(u_h)`, the minimum of the energy over the family.
    pub energy: f64,
    pub method: LinearMethod,
    pub relative_residual: f64,
}

pub fn solve_linear(p: &PenalizedProblem, fam: &FiniteElementFamily) -> Result<LinearSolution, SolverError> {
    solve_linear_with(p, fam, SolveOptions::default())
}

pub fn solve_linear_with(
    p: &PenalizedProblem,
    fam: &FiniteElementFamily,
    opts: SolveOptions,
) -> Result<LinearSolution, SolverError> {
    if p.boundary_mode == BoundaryMode::Natural && !p.mass_term {
        return Err(SolverError::Singular(
            "natural boundary without the mass term leaves constants in the kernel".into(),
        ));
    }
    let sys = assemble(p, fam);
    let (coeffs, method) = if opts.force_cg {
        cg_solve(&sys)?
    } else {
        let perm = reverse_cuthill_mckee(&sys.matrix);
        if EnvelopeCholesky::profile_size(&sys.matrix, &perm) > opts.max_envelope {
            cg_solve(&sys)?
        } else {
            let chol = EnvelopeCholesky::factor(&sys.matrix, perm)?;
            let entries = chol.stored_entries();
            (chol.solve(&sys.load), LinearMethod::Cholesky { stored_entries: entries })
        }
    };
    let ax = sys.matrix.matvec(&coeffs);
    let r: Vec<f64> = ax.iter().zip(&sys.load).map(|(a, b)| a - b).collect();
    let fnorm = norm(&sys.load);
    let relative_residual = if fnorm > 0.0 { norm(&r) / fnorm } else { norm(&r) };
    if relative_residual > TOLERANCES.linear_residual {
        return Err(SolverError::ResidualTooLarge(relative_residual));
    }
    let u = fam
        .function(coeffs)
        .expect("solution vector has one entry per degree of freedom");
    let e = energy(p, &u);
    Ok(LinearSolution {
        u,
        energy: e,
        method,
        relative_residual,
    })
}

fn cg_solve(sys: &GalerkinSystem) -> Result<(Vec<f64>, LinearMethod), SolverError> {
    let out = pcg_jacobi(&sys.matrix, &sys.load, TOLERANCES.cg, 20 * sys.dof_count + 100)?;
    Ok((
        out.solution,
        LinearMethod::ConjugateGradient {
            iterations: out.iterations,
        },
    ))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{build_mesh, difference, h1_norm, Analytic, DomainKind, Eval, Point};
    use crate::variational::{bilinear_a_lambda, CoefficientField, RightHandSide};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn interval_problem(n: usize, lambda: f64) -> (PenalizedProblem, FiniteElementFamily) {
        let mesh = Arc::new(build_mesh(DomainKind::Interval, n).unwrap());
        let p = PenalizedProblem::penalty(mesh.clone(), CoefficientField::Identity, RightHandSide::constant(1.0), lambda)
            .unwrap();
        (p, FiniteElementFamily::new(mesh))
    }

    #[test]
    fn stiffness_entries_are_a_lambda_of_basis_functions() {
        let mesh = Arc::new(build_mesh(DomainKind::UnitSquare, 3).unwrap());
        let p = PenalizedProblem::penalty(mesh.clone(), CoefficientField::SmoothAnisotropic, RightHandSide::constant(1.0), 4.0)
            .unwrap();
        let fam = FiniteElementFamily::new(mesh);
        let sys = assemble(&p, &fam);
        assert!(sys.matrix.symmetry_defect() < 1e-12);
        for (i, j) in [(0, 0), (0, 1), (5, 5), (1, 17), (3, 4)] {
            let expect = bilinear_a_lambda(&p, &fam.basis(i), &fam.basis(j)).unwrap();
            assert!((sys.matrix.get(i, j) - expect).abs() < 1e-13, "({i},{j})");
        }
    }

    #[test]
    fn penalized_1d_solution_matches_robin_closed_form() {
        let (p, fam) = interval_problem(64, 10.0);
        let sol = solve_linear(&p, &fam).unwrap();
        let ul = Analytic::new(DomainKind::Interval, |x: Point| {
            Eval::new(-0.5 * x[0] * x[0] + 0.5 * x[0] + 0.05, [0.5 - x[0], 0.0])
        });
        // P1 error of a quadratic with u'' = -1 is h / sqrt(12) in the H^1 seminorm
        let err = h1_norm(&difference(&sol.u, &ul), &p.mesh);
        let h = 1.0 / 64.0;
        assert!((err - h / 12f64.sqrt()).abs() < 1e-3 * err, "{err}");
        assert!(sol.relative_residual < 1e-10);
        assert!(matches!(sol.method, LinearMethod::Cholesky { .. }));
    }

    #[test]
    fn huge_penalty_drives_trace_to_zero() {
        let (p, fam) = interval_problem(64, 1e8);
        let sol = solve_linear(&p, &fam).unwrap();
        assert!(sol.u.coeffs[0].abs() < 1e-6 && sol.u.coeffs[64].abs() < 1e-6);
    }

    #[test]
    fn neumann_with_mass_reproduces_constant() {
        let mesh = Arc::new(build_mesh(DomainKind::Interval, 32).unwrap());
        let p = PenalizedProblem::natural(mesh.clone(), CoefficientField::Identity, RightHandSide::constant(1.0), true);
        let sol = solve_linear(&p, &FiniteElementFamily::new(mesh)).unwrap();
        let one = crate::geometry::Constant(1.0);
        assert!(h1_norm(&difference(&sol.u, &one), &p.mesh) < 1e-8);
    }

    #[test]
    fn neumann_without_mass_is_singular() {
        let mesh = Arc::new(build_mesh(DomainKind::Interval, 8).unwrap());
        let p = PenalizedProblem::natural(mesh.clone(), CoefficientField::Identity, RightHandSide::constant(1.0), false);
        assert!(matches!(
            solve_linear(&p, &FiniteElementFamily::new(mesh)),
            Err(SolverError::Singular(_))
        ));
    }

    #[test]
    fn cg_fallback_matches_cholesky() {
        let mesh = Arc::new(build_mesh(DomainKind::UnitDiskPolar, 6).unwrap());
        let p = PenalizedProblem::penalty(mesh.clone(), CoefficientField::Identity, RightHandSide::constant(1.0), 3.0)
            .unwrap();
        let fam = FiniteElementFamily::new(mesh);
        let a = solve_linear(&p, &fam).unwrap();
        let b = solve_linear_with(&p, &fam, SolveOptions { max_envelope: 10, force_cg: false }).unwrap();
        assert!(matches!(b.method, LinearMethod::ConjugateGradient { .. }));
        assert!(h1_norm(&difference(&a.u, &b.u), &p.mesh) < 1e-9);
    }

    #[test]
    fn galerkin_solution_minimizes_energy_in_family() {
        let mesh = Arc::new(build_mesh(DomainKind::UnitSquare, 4).unwrap());
        let p = PenalizedProblem::penalty(mesh.clone(), CoefficientField::Identity, RightHandSide::new("xy", |x| x[0] * x[1] + 1.0), 5.0)
            .unwrap();
        let fam = FiniteElementFamily::new(mesh);
        let sol = solve_linear(&p, &fam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let v = fam.random(&mut rng, 0.3).axpy(1.0, &sol.u);
            assert!(energy(&p, &v) - sol.energy >= -1e-11);
        }
    }
}
