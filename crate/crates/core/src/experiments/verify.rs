//! The acceptance runner: numbered checks with thresholds, timings and reports.
//!
//! Check 0 is the quadrature exactness self-test; checks 1 to 9 are the
//! acceptance criteria. Failures are collected, never short-circuited.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::analysis::low_regularity::ORACLE_RESOLUTION;
use crate::analysis::properties::cea_suite;
use crate::analysis::rates::curve_shape;
use crate::analysis::steklov::{eigen_residual, orthonormality_defect};
use crate::analysis::{
    low_regularity_rate_experiment, penalty_gap_via_formula, rho_star_nonuniform, rho_star_uniform, rho_uniform,
    steklov_modes_disk, CaseId, Scenario,
};
use crate::ansatz::{energy_gradient, Architecture, FiniteElementFamily, NetworkFamily, Sampling};
use crate::experiments::config::SweepConfig;
use crate::experiments::sweep::run_sweep;
use crate::geometry::quadrature::exactness_defect;
use crate::geometry::{build_mesh, build_mesh_with_order, difference, h1_norm, DomainKind, QuadratureRule};
use crate::solvers::{train_network, TrainConfig};
use crate::variational::{CoefficientField, PenalizedProblem, RightHandSide};

pub const CRITERIA: [u32; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];

const FIXTURE_TEXT: &str = include_str!("../../fixtures/deep_ritz_1d.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FixtureRun {
    pub seed: u64,
    pub best_energy: f64,
    pub best_iteration: usize,
    pub h1_error: f64,
}

/// The fixed-seed Deep Ritz training run and its recorded reference runs.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DeepRitzFixture {
    pub architecture: String,
    pub lambda: f64,
    pub iters: usize,
    pub lr: f64,
    pub seed: u64,
    pub mesh_resolution: usize,
    pub h1_threshold: f64,
    pub exact_minimum: f64,
    #[serde(default)]
    pub reference_runs: Vec<FixtureRun>,
}

impl DeepRitzFixture {
    pub fn embedded() -> Self {
        toml::from_str(FIXTURE_TEXT).expect("embedded fixture parses")
    }

    pub fn problem(&self) -> PenalizedProblem {
        let mesh = Arc::new(build_mesh(DomainKind::Interval, self.mesh_resolution).expect("fixture mesh"));
        PenalizedProblem::penalty(mesh, CoefficientField::Identity, RightHandSide::constant(1.0), self.lambda)
            .expect("fixture penalty is positive")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iters: self.iters,
            lr: self.lr,
            log_every: 100,
            ..TrainConfig::default()
        }
    }

    /// Trains with `seed` and returns `(h1 error to u*, best energy, best iteration, monotone trace)`.
    pub fn run(&self, seed: u64) -> Result<(f64, f64, usize, bool), String> {
        let arch: Architecture = self.architecture.parse().map_err(|e| format!("{e}"))?;
        let p = self.problem();
        let fam = NetworkFamily::init(arch, seed);
        let r = train_network(&p, &fam, &self.train_config()).map_err(|e| e.to_string())?;
        let err = h1_norm(&difference(&r.network, CaseId::IntervalPoisson.case().u_star()), &p.mesh);
        let monotone = r.trace.windows(2).all(|w| w[1].best_energy <= w[0].best_energy);
        Ok((err, r.best_energy, r.best_iteration, monotone))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyOptions {
    /// Perturbs one Gauss weight before the exactness check (fault injection).
    pub corrupt_quadrature: bool,
    /// Restrict to these criteria; `None` runs all of them.
    pub only: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub threshold: String,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {}: {} {} measured={:.6e} threshold {} ({:.1} s of {} s) {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn human(&self) -> String {
        let mut s = String::new();
        for o in &self.outcomes {
            let _ = writeln!(s, "{}", o.line());
        }
        let failed = self.outcomes.iter().filter(|o| !o.passed).count();
        let _ = writeln!(s, "{} checks, {} failed", self.outcomes.len(), failed);
        s
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("id,name,passed,measured,threshold,elapsed_ms,budget_ms,detail\n");
        for o in &self.outcomes {
            let _ = writeln!(
                s,
                "{},{},{},{:.16e},\"{}\",{:.3},{},\"{}\"",
                o.id,
                o.name,
                o.passed,
                o.measured,
                o.threshold.replace('"', "'"),
                o.elapsed.as_secs_f64() * 1e3,
                o.budget.as_millis(),
                o.detail.replace('"', "'")
            );
        }
        s
    }
}

pub fn verify_all(opts: &VerifyOptions) -> VerifyReport {
    let ids: Vec<u32> = match &opts.only {
        Some(v) => v.clone(),
        None => CRITERIA.to_vec(),
    };
    VerifyReport {
        outcomes: ids.into_iter().map(|id| run_criterion(id, opts)).collect(),
    }
}

/// Outcome of one check before timing is attached.
struct Measured {
    passed: bool,
    measured: f64,
    threshold: String,
    detail: String,
}

fn measured(passed: bool, measured: f64, threshold: impl Into<String>, detail: impl Into<String>) -> Measured {
    Measured {
        passed,
        measured,
        threshold: threshold.into(),
        detail: detail.into(),
    }
}

pub fn run_criterion(id: u32, opts: &VerifyOptions) -> CheckOutcome {
    let (name, budget_s): (&'static str, u64) = match id {
        0 => ("quadrature_exactness", 1),
        1 => ("exact_penalty_gap", 1),
        2 => ("solution_formula_reconstruction", 10),
        3 => ("steklov_spectrum", 10),
        4 => ("fe_optimal_sigma_sweep", 300),
        5 => ("fe_suboptimal_sigma_sweeps", 600),
        6 => ("rate_algebra", 1),
        7 => ("cea_suite", 30),
        8 => ("autodiff_and_training", 300),
        9 => ("low_regularity_bound", 120),
        _ => ("unknown", 0),
    };
    let started = Instant::now();
    let result = match id {
        0 => check_quadrature(opts.corrupt_quadrature),
        1 => check_penalty_gap(),
        2 => check_reconstruction(),
        3 => check_spectrum(),
        4 => check_fe_sweep(),
        5 => check_suboptimal_sweeps(),
        6 => check_rate_algebra(),
        7 => check_cea(),
        8 => check_training(),
        9 => check_low_regularity(),
        _ => Err(format!("no criterion {id}")),
    };
    let elapsed = started.elapsed();
    let budget = Duration::from_secs(budget_s);
    let m = result.unwrap_or_else(|e| measured(false, f64::NAN, "-", format!("error: {e}")));
    let in_time = elapsed <= budget;
    let detail = if in_time {
        m.detail
    } else {
        format!("{} over runtime budget", m.detail)
    };
    CheckOutcome {
        id,
        name,
        passed: m.passed && in_time,
        measured: m.measured,
        threshold: m.threshold,
        detail,
        elapsed,
        budget,
    }
}

fn check_quadrature(corrupt: bool) -> Result<Measured, String> {
    let mut rules: Vec<QuadratureRule> = (1..=8).map(QuadratureRule::gauss_legendre).collect();
    rules.push(QuadratureRule::triangle_degree4());
    rules.extend((1..=4).map(QuadratureRule::tensor_gauss));
    if corrupt {
        rules[2].weights[0] *= 1.01;
    }
    let worst = rules.iter().map(exactness_defect).fold(0.0, f64::max);
    Ok(measured(
        worst < 1e-12,
        worst,
        "< 1e-12",
        format!("{} rules{}", rules.len(), if corrupt { ", one weight corrupted" } else { "" }),
    ))
}

fn check_penalty_gap() -> Result<Measured, String> {
    let case = CaseId::IntervalPoisson.case();
    let mesh = build_mesh(DomainKind::Interval, 4).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for lambda in [1.0, 10.0, 100.0, 1000.0] {
        let ul = case.u_lambda(lambda).ok_or("no closed form")?;
        let gap = h1_norm(&difference(&ul, case.u_star()), &mesh);
        worst = worst.max((gap - 1.0 / (2.0 * lambda)).abs());
    }
    Ok(measured(worst < 1e-10, worst, "< 1e-10", "lambda in {1, 10, 100, 1000}"))
}

fn check_reconstruction() -> Result<Measured, String> {
    let mesh = build_mesh_with_order(DomainKind::UnitDiskPolar, 8, 12).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for id in [CaseId::DiskRadial, CaseId::DiskMode1] {
        let case = id.case();
        for lambda in [1.0, 10.0, 100.0] {
            let rec = penalty_gap_via_formula(&case, lambda, 8, &mesh).map_err(|e| e.to_string())?;
            let v = case.v_lambda(lambda).ok_or("no closed form")?;
            worst = worst.max(h1_norm(&difference(&rec, v), &mesh));
        }
    }
    Ok(measured(worst < 1e-8, worst, "< 1e-8", "K = 8, two disk cases, lambda in {1, 10, 100}"))
}

fn check_spectrum() -> Result<Measured, String> {
    let mesh = Arc::new(build_mesh_with_order(DomainKind::UnitDiskPolar, 8, 12).map_err(|e| e.to_string())?);
    let modes = steklov_modes_disk(21, &CoefficientField::Identity).map_err(|e| e.to_string())?;
    let gram = orthonormality_defect(&modes, &mesh);
    let fam = FiniteElementFamily::new(mesh.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut residual: f64 = 0.0;
    for _ in 0..20 {
        let phi = fam.random(&mut rng, 1.0);
        for e in &modes {
            residual = residual.max(eigen_residual(e, &phi, &mesh).abs());
        }
    }
    Ok(measured(
        gram < 1e-10 && residual < 1e-8,
        gram.max(residual),
        "gram < 1e-10, residual < 1e-8",
        format!("gram deviation {gram:.3e}, eigen residual {residual:.3e}"),
    ))
}

/// Penalty base of the acceptance sweeps. The penalty error of square_sine only
/// decays like `1/lambda` once lambda is well above a few units; with `lambda0 = 1`
/// the `sigma = 0.5` sweep (lambda from 2.8 to 8) never leaves that transient.
pub const SWEEP_LAMBDA0: f64 = 4.0;

fn fe_sweep_rate(sigma: f64) -> Result<f64, String> {
    let cfg = SweepConfig {
        case: CaseId::SquareSine,
        scales: vec![8, 16, 32, 64],
        sigma,
        lambda0: SWEEP_LAMBDA0,
        ..SweepConfig::default()
    };
    let out = run_sweep(&cfg).map_err(|e| e.to_string())?;
    if let Some(f) = out.failure {
        return Err(f.message);
    }
    out.rate.ok_or_else(|| "no rate fitted".into())
}

fn check_fe_sweep() -> Result<Measured, String> {
    let rate = fe_sweep_rate(1.0)?;
    Ok(measured(
        (0.85..=1.15).contains(&rate),
        rate,
        "in [0.85, 1.15]",
        "square_sine, sigma = 1, lambda0 = 4, h = 1/8 .. 1/64",
    ))
}

fn check_suboptimal_sweeps() -> Result<Measured, String> {
    let mut ok = true;
    let mut margin = f64::INFINITY;
    let mut detail = Vec::new();
    for sigma in [0.25, 0.5] {
        let rate = fe_sweep_rate(sigma)?;
        let floor = rho_uniform(sigma, 1.0, 1.5).map_err(|e| e.to_string())? - 0.1;
        ok &= rate >= floor;
        margin = margin.min(rate - floor);
        detail.push(format!("sigma {sigma}: rate {rate:.4} >= {floor:.4}"));
    }
    Ok(measured(ok, margin, "rate - (rho(sigma) - 0.1) >= 0", detail.join("; ")))
}

fn check_rate_algebra() -> Result<Measured, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0usize;
    let mut worst_shape: f64 = 0.0;
    for _ in 0..1000 {
        let r: f64 = rng.gen_range(0.01..3.0);
        let s: f64 = r + rng.gen_range(0.0..3.0);
        let (su, ru) = rho_star_uniform(r, s).map_err(|e| e.to_string())?;
        let (sn, rn) = rho_star_nonuniform(r, s).map_err(|e| e.to_string())?;
        if ru != (2.0 * s / 3.0).min(r) || rn != (s / 2.0).min(r) {
            mismatches += 1;
        }
        for (scenario, star, rho_star) in [(Scenario::Uniform, su, ru), (Scenario::Nonuniform, sn, rn)] {
            // the rate at the optimal sigma agrees with the optimum up to rounding
            let at_star = scenario.rho(star, r, s).map_err(|e| e.to_string())?;
            if (at_star - rho_star).abs() > 4.0 * f64::EPSILON * rho_star.abs().max(1.0) {
                mismatches += 1;
            }
            let grid: Vec<f64> = (0..100).map(|i| 2.0 * s * i as f64 / 99.0).collect();
            let shape = curve_shape(scenario, r, s, &grid).map_err(|e| e.to_string())?;
            let over = (shape.max - rho_star).max(0.0);
            worst_shape = worst_shape.max(shape.concavity_violation).max(over);
            // at most two kinks, each visible at no more than two grid nodes
            if shape.kink_count > 4 {
                mismatches += 1;
            }
        }
    }
    Ok(measured(
        mismatches == 0 && worst_shape <= 1e-12,
        worst_shape,
        "exact optima, concavity violation <= 1e-12",
        format!("1000 random (r, s), {mismatches} mismatches"),
    ))
}

fn check_cea() -> Result<Measured, String> {
    let samples = cea_suite(32, 100, 7).map_err(|e| e.to_string())?;
    let violations = samples.iter().filter(|c| !c.holds(1e-12)).count();
    let equality = samples
        .iter()
        .map(|c| (c.distance * c.distance - c.bound * c.bound).abs())
        .fold(0.0, f64::max);
    Ok(measured(
        violations == 0 && equality < 1e-9,
        equality,
        "bound holds, |d^2 - bound^2| < 1e-9",
        format!("100 candidates, {violations} violations"),
    ))
}

/// Largest relative error `|g - g_fd| / |g_fd|` over `checks` random networks and problems.
pub fn gradient_check_suite(checks: usize, seed: u64) -> Result<f64, String> {
    let archs = ["1-8-1:tanh", "1-6-6-1:tanh", "2-5-5-1:tanh", "2-8-1:tanh", "1-4-4-4-1:tanh"];
    let interval = Arc::new(build_mesh(DomainKind::Interval, 8).map_err(|e| e.to_string())?);
    let square = Arc::new(build_mesh(DomainKind::UnitSquare, 3).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..checks {
        let arch: Architecture = archs[i % archs.len()].parse().map_err(|e| format!("{e}"))?;
        let (mesh, coefficient) = if arch.input_dim() == 1 {
            (interval.clone(), CoefficientField::Identity)
        } else if i % 2 == 0 {
            (square.clone(), CoefficientField::SmoothAnisotropic)
        } else {
            (square.clone(), CoefficientField::Identity)
        };
        let lambda = 10f64.powf(rng.gen_range(0.0..2.0));
        let rhs = RightHandSide::new("sin(3x) + y", |x| (3.0 * x[0]).sin() + x[1]);
        let p = PenalizedProblem::penalty(mesh, coefficient, rhs, lambda).map_err(|e| e.to_string())?;
        let quad = Sampling::from_samples(0, 0).quadrature(&p);
        let fam = NetworkFamily::init(arch, seed.wrapping_add(i as u64));
        let (_, g) = energy_gradient(&fam, &p, &quad).map_err(|e| e.to_string())?;
        let e_at = |theta: &NetworkFamily| energy_gradient(theta, &p, &quad).map(|r| r.0);
        let mut diff_sq = 0.0;
        let mut fd_sq = 0.0;
        let h = 1e-4;
        for k in 0..fam.params.len() {
            let mut shifted = fam.clone();
            let mut at = |t: f64| {
                shifted.params[k] = fam.params[k] + t;
                e_at(&shifted)
            };
            let (m2, m1, p1, p2) = (
                at(-2.0 * h).map_err(|e| e.to_string())?,
                at(-h).map_err(|e| e.to_string())?,
                at(h).map_err(|e| e.to_string())?,
                at(2.0 * h).map_err(|e| e.to_string())?,
            );
            let fd = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
            diff_sq += (g[k] - fd).powi(2);
            fd_sq += fd * fd;
        }
        worst = worst.max((diff_sq / fd_sq).sqrt());
    }
    Ok(worst)
}

fn check_training() -> Result<Measured, String> {
    let grad = gradient_check_suite(200, 8)?;
    let fixture = DeepRitzFixture::embedded();
    let (err, best, at, monotone) = fixture.run(fixture.seed)?;
    Ok(measured(
        grad < 1e-6 && err < fixture.h1_threshold && monotone,
        err,
        format!("gradient rel-err < 1e-6, h1 < {}", fixture.h1_threshold),
        format!(
            "200 gradient checks max rel-err {grad:.3e}; deep ritz best energy {best:.6} at iteration {at}, trace {}",
            if monotone { "monotone" } else { "not monotone" }
        ),
    ))
}

fn check_low_regularity() -> Result<Measured, String> {
    let lambdas = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0];
    let r = low_regularity_rate_experiment(&CaseId::IntervalSignflip.case(), &lambdas, ORACLE_RESOLUTION)
        .map_err(|e| e.to_string())?;
    let rate = r.rate();
    Ok(measured(rate >= 0.45, rate, ">= 0.45", "interval_signflip, L2 rate in lambda, 8 .. 256"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_parses_and_records_its_derivation() {
        let f = DeepRitzFixture::embedded();
        assert_eq!(f.architecture, "1-16-16-1:tanh");
        assert_eq!(f.iters, 20000);
        assert!(f.reference_runs.iter().all(|r| r.h1_error < f.h1_threshold));
        assert!(f.reference_runs.iter().all(|r| r.best_energy > f.exact_minimum));
        assert!((f.exact_minimum - (-1.0 / 24.0 - 1.0 / 400.0)).abs() < 1e-15);
    }

    #[test]
    fn quadrature_check_detects_corruption() {
        let ok = run_criterion(0, &VerifyOptions::default());
        assert!(ok.passed, "{}", ok.line());
        let bad = run_criterion(0, &VerifyOptions { corrupt_quadrature: true, only: None });
        assert!(!bad.passed);
    }

    #[test]
    fn fast_criteria_pass() {
        let report = verify_all(&VerifyOptions { only: Some(vec![1, 6]), ..Default::default() });
        assert!(report.all_passed(), "{}", report.human());
        assert_eq!(report.csv().lines().count(), 3);
    }

    #[test]
    fn unknown_criterion_fails() {
        assert!(!run_criterion(42, &VerifyOptions::default()).passed);
    }

    #[test]
    fn gradient_checks_on_a_few_networks() {
        assert!(gradient_check_suite(10, 3).unwrap() < 1e-6);
    }

    /// Retrains every recorded seed and prints fixture entries; run with `--ignored`
    /// after changing the optimizer or initialization.
    #[test]
    #[ignore]
    fn regenerate_fixture_runs() {
        let f = DeepRitzFixture::embedded();
        for seed in 0..5 {
            let (err, best, at, _) = f.run(seed).unwrap();
            println!("[[reference_runs]]\nseed = {seed}\nbest_energy = {best:?}\nbest_iteration = {at}\nh1_error = {err:?}\n");
        }
    }
}
