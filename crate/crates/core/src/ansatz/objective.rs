//! The discretized Ritz energy of a network and its exact parameter gradient.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ansatz::network::NetworkFamily;
use crate::ansatz::tape::{GradientTape, Seed};
use crate::ansatz::AnsatzError;
use crate::geometry::{Point, Quadrature};
use crate::variational::PenalizedProblem;

/// How the volume integral is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// The mesh's deterministic quadrature.
    Mesh,
    /// A fixed set of `samples` uniform points drawn once from `seed`. The
    /// boundary term always uses the mesh facets.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Sampling {
    /// `0` selects the mesh quadrature, matching the `--mc-samples` flag.
    pub fn from_samples(samples: usize, seed: u64) -> Self {
        if samples == 0 {
            Sampling::Mesh
        } else {
            Sampling::MonteCarlo { samples, seed }
        }
    }

    pub fn quadrature(&self, p: &PenalizedProblem) -> Quadrature {
        match *self {
            Sampling::Mesh => p.mesh.quadrature().clone(),
            Sampling::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                p.mesh
                    .quadrature()
                    .with_monte_carlo_volume(p.mesh.kind, samples, &mut rng)
            }
        }
    }
}

/// Points per batch; batches are reduced in a fixed order.
const CHUNK: usize = 256;

enum Term {
    Volume,
    Boundary,
}

struct Item {
    x: Point,
    weight: f64,
    term: Term,
}

/// Energy `E_lambda(u_theta)` on `quad` and its gradient with respect to `theta`.
pub fn energy_gradient(
    fam: &NetworkFamily,
    p: &PenalizedProblem,
    quad: &Quadrature,
) -> Result<(f64, Vec<f64>), AnsatzError> {
    if fam.params.len() != fam.arch.param_count() {
        return Err(AnsatzError::Config("parameter vector does not match architecture".into()));
    }
    if fam.arch.input_dim() != p.mesh.kind.dim() {
        return Err(AnsatzError::Config(format!(
            "network input dimension {} does not match domain {}",
            fam.arch.input_dim(),
            p.mesh.kind
        )));
    }
    let lambda = p.boundary_weight();
    let mut items: Vec<Item> = quad
        .volume
        .iter()
        .map(|q| Item {
            x: q.at.x,
            weight: q.weight,
            term: Term::Volume,
        })
        .collect();
    if lambda > 0.0 {
        items.extend(quad.boundary.iter().map(|q| Item {
            x: q.at.x,
            weight: q.weight,
            term: Term::Boundary,
        }));
    }

    let partials: Vec<Result<(f64, Vec<f64>), AnsatzError>> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let pts: Vec<Point> = chunk.iter().map(|it| it.x).collect();
            let tape = GradientTape::record(fam, &pts);
            let mut e = 0.0;
            let mut seeds = Vec::with_capacity(chunk.len());
            for (i, it) in chunk.iter().enumerate() {
                let ev = tape.output(i);
                if !ev.value.is_finite() || !ev.grad.iter().all(|g| g.is_finite()) {
                    return Err(AnsatzError::NumericalFailure { point: it.x });
                }
                match it.term {
                    Term::Volume => {
                        let ag = p.coefficient.apply(it.x, ev.grad);
                        let f = p.rhs.eval(it.x);
                        let mut density = 0.5 * (ag[0] * ev.grad[0] + ag[1] * ev.grad[1]);
                        let mut du = -f;
                        if p.mass_term {
                            density += 0.5 * ev.value * ev.value;
                            du += ev.value;
                        }
                        density -= f * ev.value;
                        e += it.weight * density;
                        seeds.push(Seed {
                            value: it.weight * du,
                            grad: [it.weight * ag[0], it.weight * ag[1]],
                        });
                    }
                    Term::Boundary => {
                        e += it.weight * 0.5 * lambda * ev.value * ev.value;
                        seeds.push(Seed {
                            value: it.weight * lambda * ev.value,
                            grad: [0.0, 0.0],
                        });
                    }
                }
            }
            Ok((e, tape.backward(&seeds).params))
        })
        .collect();

    let mut energy = 0.0;
    let mut grad = vec![0.0; fam.params.len()];
    for part in partials {
        let (e, g) = part?;
        energy += e;
        for (acc, v) in grad.iter_mut().zip(&g) {
            *acc += v;
        }
    }
    if !energy.is_finite() {
        return Err(AnsatzError::NumericalFailure { point: [f64::NAN, f64::NAN] });
    }
    Ok((energy, grad))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::ansatz::network::Architecture;
    use crate::geometry::{boundary_l2_norm, build_mesh, DomainKind};
    use crate::variational::{energy_on, CoefficientField, RightHandSide};

    fn problem(kind: DomainKind, lambda: f64) -> PenalizedProblem {
        let mesh = Arc::new(build_mesh(kind, 6).unwrap());
        PenalizedProblem::penalty(
            mesh,
            CoefficientField::Identity,
            RightHandSide::new("test", |x| 1.0 + x[0] - 0.5 * x[1]),
            lambda,
        )
        .unwrap()
    }

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        num / b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-12)
    }

    #[test]
    fn energy_matches_variational_core() {
        for (kind, arch) in [(DomainKind::Interval, "1-8-8-1:tanh"), (DomainKind::UnitSquare, "2-6-1:relu")] {
            let p = problem(kind, 7.0);
            let fam = NetworkFamily::init(arch.parse().unwrap(), 3);
            let quad = p.mesh.quadrature();
            let (e, _) = energy_gradient(&fam, &p, quad).unwrap();
            let reference = energy_on(&p, quad, &fam);
            assert!((e - reference).abs() <= 1e-12 * (1.0 + reference.abs()), "{e} {reference}");
        }
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        for kind in [DomainKind::Interval, DomainKind::UnitSquare] {
            let p = problem(kind, 5.0);
            let arch: Architecture = if kind == DomainKind::Interval {
                "1-6-6-1:tanh".parse().unwrap()
            } else {
                "2-5-4-1:tanh".parse().unwrap()
            };
            let mut fam = NetworkFamily::init(arch.clone(), 8);
            // non-zero biases so every parameter is exercised
            for (i, v) in fam.params.iter_mut().enumerate() {
                *v += 0.05 * ((i * 7919) % 13) as f64 / 13.0;
            }
            let quad = Sampling::MonteCarlo { samples: 300, seed: 1 }.quadrature(&p);
            let (_, g) = energy_gradient(&fam, &p, &quad).unwrap();
            let step = 1e-5;
            let fd: Vec<f64> = (0..fam.params.len())
                .map(|i| {
                    let mut f = fam.clone();
                    f.params[i] += step;
                    let up = energy_gradient(&f, &p, &quad).unwrap().0;
                    f.params[i] -= 2.0 * step;
                    (up - energy_gradient(&f, &p, &quad).unwrap().0) / (2.0 * step)
                })
                .collect();
            assert!(rel(&g, &fd) < 1e-6, "{kind}: {}", rel(&g, &fd));
        }
    }

    #[test]
    fn zero_network_has_zero_energy_and_load_bias_gradient() {
        let mesh = Arc::new(build_mesh(DomainKind::Interval, 8).unwrap());
        let p = PenalizedProblem::penalty(mesh, CoefficientField::Identity, RightHandSide::constant(1.0), 10.0)
            .unwrap();
        let arch: Architecture = "1-4-1:tanh".parse().unwrap();
        let mut fam = NetworkFamily::init(arch, 0);
        let n = fam.params.len();
        // zero output layer: u == 0
        for v in &mut fam.params[n - 5..] {
            *v = 0.0;
        }
        let (e, g) = energy_gradient(&fam, &p, p.mesh.quadrature()).unwrap();
        assert_eq!(e, 0.0);
        // d/d(output bias) = lambda * sum u * w_b - int f = -1 at u == 0
        assert!((g[n - 1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn doubling_lambda_adds_boundary_mass() {
        let p = problem(DomainKind::UnitSquare, 3.0);
        let p2 = p.with_lambda(6.0).unwrap();
        let fam = NetworkFamily::init("2-6-1:tanh".parse().unwrap(), 12);
        let quad = p.mesh.quadrature();
        let (e1, _) = energy_gradient(&fam, &p, quad).unwrap();
        let (e2, _) = energy_gradient(&fam, &p2, quad).unwrap();
        let b = boundary_l2_norm(&fam, &p.mesh);
        // E_{2 lambda} - E_lambda = lambda/2 ||u||^2_{L^2(boundary)}
        assert!(((e2 - e1) - 0.5 * 3.0 * b * b).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_samples_are_seeded() {
        let p = problem(DomainKind::UnitSquare, 1.0);
        let a = Sampling::MonteCarlo { samples: 50, seed: 9 }.quadrature(&p);
        let b = Sampling::MonteCarlo { samples: 50, seed: 9 }.quadrature(&p);
        let xa: Vec<Point> = a.volume.iter().map(|q| q.at.x).collect();
        let xb: Vec<Point> = b.volume.iter().map(|q| q.at.x).collect();
        assert_eq!(xa, xb);
        assert_eq!(a.boundary.len(), p.mesh.quadrature().boundary.len());
    }
}
