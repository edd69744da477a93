//! First-order training of network ansatz functions on the penalized energy.
//!
//! The optimizer is momentum-free with a running average of squared gradients
//! (bias-corrected), full batch on a fixed quadrature. The best parameters seen
//! are returned, not the last ones.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::ansatz::{energy_gradient, AnsatzError, Architecture, NetworkFamily, Sampling};
use crate::solvers::SolverError;
use crate::tolerances::TOLERANCES;
use crate::variational::{energy_on, gap_from_energies, PenalizedProblem};

pub const OPTIMIZER_LABEL: &str = "rmsprop (momentum-free adaptive step, bias-corrected)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub iters: usize,
    pub lr: f64,
    /// Decay of the running squared-gradient average.
    pub decay: f64,
    pub eps: f64,
    /// Seed of the Monte-Carlo volume sample (network initialization carries its own seed).
    pub seed: u64,
    /// `0` trains on the mesh quadrature.
    pub mc_samples: usize,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iters: 1000,
            lr: 1e-3,
            decay: 0.999,
            eps: 1e-8,
            seed: 0,
            mc_samples: 0,
            log_every: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub energy: f64,
    pub best_energy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Best-seen parameters.
    pub network: NetworkFamily,
    pub best_energy: f64,
    pub best_iteration: usize,
    pub trace: Vec<TraceEntry>,
    /// Gradient norm at the final iterate.
    pub final_grad_norm: f64,
    pub wall_time: Duration,
    pub config: TrainConfig,
    pub optimizer: &'static str,
}

impl TrainReport {
    /// Re-evaluates `E_lambda` at the returned parameters on the training rule.
    pub fn reevaluate(&self, p: &PenalizedProblem) -> f64 {
        let quad = Sampling::from_samples(self.config.mc_samples, self.config.seed).quadrature(p);
        energy_on(p, &quad, &self.network)
    }
}

pub fn train_network(
    p: &PenalizedProblem,
    fam: &NetworkFamily,
    cfg: &TrainConfig,
) -> Result<TrainReport, SolverError> {
    let started = Instant::now();
    let quad = Sampling::from_samples(cfg.mc_samples, cfg.seed).quadrature(p);
    let log_every = cfg.log_every.max(1);
    let mut theta = fam.clone();
    let mut second = vec![0.0; theta.params.len()];
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut trace = Vec::new();
    let mut final_grad_norm = 0.0;

    for it in 0..=cfg.iters {
        let (e, g) = match energy_gradient(&theta, p, &quad) {
            Ok(eg) => eg,
            Err(AnsatzError::NumericalFailure { .. }) => (f64::NAN, Vec::new()),
            Err(other) => return Err(other.into()),
        };
        if !e.is_finite() || e > TOLERANCES.divergence_energy {
            trace.push(TraceEntry {
                iteration: it,
                energy: e,
                best_energy: best.as_ref().map_or(e, |b| b.0),
            });
            return Err(SolverError::Diverged {
                iteration: it,
                energy: e,
                trace,
            });
        }
        // strict comparison: the earliest iterate wins ties
        if best.as_ref().map_or(true, |b| e < b.0) {
            best = Some((e, it, theta.params.clone()));
        }
        if it % log_every == 0 || it == cfg.iters {
            trace.push(TraceEntry {
                iteration: it,
                energy: e,
                best_energy: best.as_ref().unwrap().0,
            });
        }
        if it == cfg.iters {
            final_grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            break;
        }
        let correction = 1.0 - cfg.decay.powi(it as i32 + 1);
        for ((th, v), gi) in theta.params.iter_mut().zip(second.iter_mut()).zip(&g) {
            *v = cfg.decay * *v + (1.0 - cfg.decay) * gi * gi;
            let vhat = *v / correction;
            *th -= cfg.lr * gi / (vhat.sqrt() + cfg.eps);
        }
    }

    let (best_energy, best_iteration, params) = best.expect("at least one evaluation");
    let mut network = fam.clone();
    network.params = params;
    Ok(TrainReport {
        network,
        best_energy,
        best_iteration,
        trace,
        final_grad_norm,
        wall_time: started.elapsed(),
        config: *cfg,
        optimizer: OPTIMIZER_LABEL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// The Galerkin minimum over a linear family: the true infimum.
    ExactMinimum,
    /// Best energy found over several long training runs. Not the true infimum.
    EmpiricalLowerEnvelope,
}

impl ReferenceKind {
    pub fn label(self) -> &'static str {
        match self {
            ReferenceKind::ExactMinimum => "exact minimum over the family",
            ReferenceKind::EmpiricalLowerEnvelope => "empirical lower envelope",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub value: f64,
    pub kind: ReferenceKind,
    pub detail: String,
}

impl Reference {
    pub fn exact(value: f64) -> Self {
        Reference {
            value,
            kind: ReferenceKind::ExactMinimum,
            detail: "galerkin solve".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate {
    pub delta: f64,
    pub candidate_energy: f64,
    pub reference: Reference,
    /// The reference lay above the candidate by more than the clamp tolerance.
    pub inconsistent: bool,
}

pub fn certify_energy(candidate_energy: f64, reference: &Reference) -> GapCertificate {
    let gap = gap_from_energies(candidate_energy, reference.value);
    GapCertificate {
        delta: gap.delta,
        candidate_energy,
        reference: reference.clone(),
        inconsistent: gap.inconsistent,
    }
}

/// `delta = E_lambda(best theta) - reference`.
pub fn certify_gap(report: &TrainReport, reference: &Reference) -> GapCertificate {
    certify_energy(report.best_energy, reference)
}

/// Minimum best-seen energy over `seeds` independent runs of `budget_factor x cfg.iters` iterations.
pub fn empirical_envelope(
    p: &PenalizedProblem,
    arch: &Architecture,
    cfg: &TrainConfig,
    seeds: &[u64],
    budget_factor: usize,
) -> Result<Reference, SolverError> {
    let long = TrainConfig {
        iters: cfg.iters * budget_factor,
        ..*cfg
    };
    let energies: Vec<Result<f64, SolverError>> = seeds
        .par_iter()
        .map(|&s| {
            let fam = NetworkFamily::init(arch.clone(), s);
            train_network(p, &fam, &long).map(|r| r.best_energy)
        })
        .collect();
    let mut best = f64::INFINITY;
    for e in energies {
        best = best.min(e?);
    }
    Ok(Reference {
        value: best,
        kind: ReferenceKind::EmpiricalLowerEnvelope,
        detail: format!(
            "min over {} seeds x {} iterations of {}",
            seeds.len(),
            long.iters,
            arch
        ),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{build_mesh, DomainKind};
    use crate::variational::{CoefficientField, RightHandSide};

    fn problem() -> PenalizedProblem {
        let mesh = Arc::new(build_mesh(DomainKind::Interval, 16).unwrap());
        PenalizedProblem::penalty(mesh, CoefficientField::Identity, RightHandSide::constant(1.0), 100.0).unwrap()
    }

    #[test]
    fn zero_budget_returns_initial_parameters() {
        let p = problem();
        let fam = NetworkFamily::init("1-4-1:tanh".parse().unwrap(), 3);
        let cfg = TrainConfig { iters: 0, ..Default::default() };
        let r = train_network(&p, &fam, &cfg).unwrap();
        assert_eq!(r.network.params, fam.params);
        assert_eq!(r.trace.len(), 1);
        let reference = Reference::exact(-1.0 / 24.0 - 1.0 / 400.0);
        let cert = certify_gap(&r, &reference);
        assert!((cert.delta - (r.best_energy - reference.value)).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_trace_and_monotone_best() {
        let p = problem();
        let fam = NetworkFamily::init("1-6-6-1:tanh".parse().unwrap(), 5);
        let cfg = TrainConfig { iters: 300, log_every: 10, lr: 1e-2, ..Default::default() };
        let a = train_network(&p, &fam, &cfg).unwrap();
        let b = train_network(&p, &fam, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        assert!(a.trace.windows(2).all(|w| w[1].best_energy <= w[0].best_energy));
        assert_eq!(a.reevaluate(&p), a.best_energy);
        assert!(a.best_energy < a.trace[0].energy);
    }

    #[test]
    fn divergence_aborts_with_trace() {
        let p = problem();
        let mut fam = NetworkFamily::init("1-4-1:tanh".parse().unwrap(), 5);
        let n = fam.params.len();
        // output weights so large that the Dirichlet energy exceeds the threshold
        for v in &mut fam.params[n - 5..n - 1] {
            *v = 1e4;
        }
        match train_network(&p, &fam, &TrainConfig { iters: 5, ..Default::default() }) {
            Err(SolverError::Diverged { trace, .. }) => assert!(!trace.is_empty()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn gap_certificates() {
        let envelope = Reference {
            value: -0.0667,
            kind: ReferenceKind::EmpiricalLowerEnvelope,
            detail: String::new(),
        };
        let c = certify_energy(-0.060, &envelope);
        assert!((c.delta - 0.0067).abs() < 1e-12);
        assert_eq!(c.reference.kind.label(), "empirical lower envelope");
        let c = certify_energy(-0.07, &envelope);
        assert!(c.inconsistent && c.delta == 0.0);
        let c = certify_energy(-0.5, &Reference::exact(-0.5));
        assert_eq!(c.delta, 0.0);
    }
}
