//! Refinement sweeps over `(V_n, lambda_n)` with CSV, sidecar and plot-data output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{fit_rate, ExactSolutionCase, RateFit, Window};
use crate::ansatz::{FeFunction, FiniteElementFamily, NetworkFamily, Relocated};
use crate::experiments::config::{AnsatzKind, ReferenceMode, SweepConfig};
use crate::experiments::ExperimentError;
use crate::geometry::{build_mesh_with_order, difference, norm_parts, DiscreteFunction, DomainMesh};
use crate::solvers::{certify_energy, solve_linear, train_network, Reference, ReferenceKind};
use crate::variational::PenalizedProblem;

pub const CSV_HEADER: &str = "scale,lambda,h1_error,bdry_l2_error,energy,delta,seed,walltime_ms";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub scale: f64,
    pub lambda: f64,
    pub h1_error: f64,
    pub bdry_l2_error: f64,
    pub energy: f64,
    pub delta: f64,
    pub seed: u64,
    pub walltime_ms: f64,
}

impl SweepRecord {
    pub fn csv_row(&self, with_walltime: bool) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            self.scale,
            self.lambda,
            self.h1_error,
            self.bdry_l2_error,
            self.energy,
            self.delta,
            self.seed,
            if with_walltime { self.walltime_ms } else { 0.0 }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub scale: f64,
    pub lambda: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Grid order; stops before the first failing grid point.
    pub records: Vec<SweepRecord>,
    pub fit: Option<RateFit>,
    /// Decay exponent: the slope against `h` for elements, minus the slope against `n` for networks.
    pub rate: Option<f64>,
    pub reference: String,
    pub delta_reference: String,
    pub failure: Option<SweepFailure>,
    pub total_ms: f64,
}

struct Target {
    mesh: Option<Arc<DomainMesh>>,
    reference: Option<FeFunction>,
    label: String,
}

impl Target {
    fn error_parts<U: DiscreteFunction>(&self, case: &ExactSolutionCase, u: &U, mesh: &DomainMesh) -> (f64, f64) {
        let parts = match &self.reference {
            Some(r) => norm_parts(&difference(u, Relocated(r)), mesh.quadrature()),
            None => norm_parts(&difference(u, case.u_star()), mesh.quadrature()),
        };
        (parts.h1(), parts.boundary_sq.sqrt())
    }
}

fn build_target(cfg: &SweepConfig) -> Result<Target, ExperimentError> {
    let case = cfg.case.case();
    match cfg.reference {
        ReferenceMode::ClosedForm => Ok(Target {
            mesh: None,
            reference: None,
            label: format!("closed-form u* of {}", cfg.case),
        }),
        ReferenceMode::Solve => {
            let finest = *cfg.scales.last().expect("validated non-empty");
            let res = match cfg.ansatz {
                AnsatzKind::Fe => 2 * finest,
                AnsatzKind::Network => 2 * cfg.mesh_resolution,
            };
            let lambda = 16.0 * cfg.lambda_for(finest);
            let mesh = Arc::new(build_mesh_with_order(case.domain(), res, cfg.gauss_points)?);
            let p = PenalizedProblem::penalty(mesh.clone(), case.coefficient(), case.rhs(), lambda)?;
            let sol = solve_linear(&p, &FiniteElementFamily::new(mesh.clone()))?;
            Ok(Target {
                mesh: Some(mesh),
                reference: Some(sol.u),
                label: format!("reference: finite-element solve at resolution {res}, lambda {lambda:e}"),
            })
        }
    }
}

fn fe_point(cfg: &SweepConfig, target: &Target, n: usize) -> Result<SweepRecord, ExperimentError> {
    let started = Instant::now();
    let case = cfg.case.case();
    let lambda = cfg.lambda_for(n);
    let mesh = Arc::new(build_mesh_with_order(case.domain(), n, cfg.gauss_points)?);
    let p = PenalizedProblem::penalty(mesh.clone(), case.coefficient(), case.rhs(), lambda)?;
    let sol = solve_linear(&p, &FiniteElementFamily::new(mesh.clone()))?;
    let delta = certify_energy(sol.energy, &Reference::exact(sol.energy)).delta;
    let (h1_error, bdry_l2_error) = target.error_parts(&case, &sol.u, &mesh);
    Ok(SweepRecord {
        scale: cfg.scale_value(n),
        lambda,
        h1_error,
        bdry_l2_error,
        energy: sol.energy,
        delta,
        seed: cfg.seeds[0],
        walltime_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

fn network_point(cfg: &SweepConfig, target: &Target, n: usize) -> Result<Vec<SweepRecord>, ExperimentError> {
    let case = cfg.case.case();
    let lambda = cfg.lambda_for(n);
    let mesh = match &target.mesh {
        Some(m) if cfg.reference == ReferenceMode::Solve && m.resolution == cfg.mesh_resolution => m.clone(),
        _ => Arc::new(build_mesh_with_order(case.domain(), cfg.mesh_resolution, cfg.gauss_points)?),
    };
    let p = PenalizedProblem::penalty(mesh.clone(), case.coefficient(), case.rhs(), lambda)?;
    let arch = cfg.architecture(n)?;
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let started = Instant::now();
        let fam = NetworkFamily::init(arch.clone(), seed);
        let report = train_network(&p, &fam, &cfg.train_config(seed))?;
        runs.push((seed, report, started.elapsed().as_secs_f64() * 1e3));
    }
    let envelope = Reference {
        value: runs.iter().map(|r| r.1.best_energy).fold(f64::INFINITY, f64::min),
        kind: ReferenceKind::EmpiricalLowerEnvelope,
        detail: format!("best over seeds {:?} at width {n}", cfg.seeds),
    };
    Ok(runs
        .into_iter()
        .map(|(seed, report, ms)| {
            let (h1_error, bdry_l2_error) = target.error_parts(&case, &report.network, &mesh);
            SweepRecord {
                scale: cfg.scale_value(n),
                lambda,
                h1_error,
                bdry_l2_error,
                energy: report.best_energy,
                delta: certify_energy(report.best_energy, &envelope).delta,
                seed,
                walltime_ms: ms,
            }
        })
        .collect())
}

/// Runs every grid point (in parallel) and assembles the records in grid order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome, ExperimentError> {
    cfg.validate()?;
    let started = Instant::now();
    let target = build_target(cfg)?;
    let results: Vec<Result<Vec<SweepRecord>, ExperimentError>> = cfg
        .scales
        .par_iter()
        .map(|&n| match cfg.ansatz {
            AnsatzKind::Fe => fe_point(cfg, &target, n).map(|r| vec![r]),
            AnsatzKind::Network => network_point(cfg, &target, n),
        })
        .collect();
    let mut records = Vec::new();
    let mut failure = None;
    for (&n, res) in cfg.scales.iter().zip(results) {
        match res {
            Ok(rs) => records.extend(rs),
            Err(e) => {
                failure = Some(SweepFailure {
                    scale: cfg.scale_value(n),
                    lambda: cfg.lambda_for(n),
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    // best error per grid point
    let mut points: Vec<(f64, f64)> = Vec::new();
    for r in &records {
        match points.last_mut() {
            Some(last) if last.0 == r.scale => last.1 = last.1.min(r.h1_error),
            _ => points.push((r.scale, r.h1_error)),
        }
    }
    let fit = if failure.is_none() && points.len() >= 3 {
        Some(fit_rate(&points, Window::Last(cfg.fit_window.max(3)))?)
    } else {
        None
    };
    let rate = fit.as_ref().map(|f| match cfg.ansatz {
        AnsatzKind::Fe => f.slope,
        AnsatzKind::Network => -f.slope,
    });
    let delta_reference = match cfg.ansatz {
        AnsatzKind::Fe => ReferenceKind::ExactMinimum.label().to_string(),
        AnsatzKind::Network => format!("{} over seeds {:?}", ReferenceKind::EmpiricalLowerEnvelope.label(), cfg.seeds),
    };
    Ok(SweepOutcome {
        records,
        fit,
        rate,
        reference: target.label,
        delta_reference,
        failure,
        total_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

pub fn csv_text(cfg: &SweepConfig, outcome: &SweepOutcome) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in &outcome.records {
        s.push_str(&r.csv_row(cfg.record_walltime));
        s.push('\n');
    }
    if let Some(f) = &outcome.failure {
        let nan = f64::NAN;
        let row = SweepRecord {
            scale: f.scale,
            lambda: f.lambda,
            h1_error: nan,
            bdry_l2_error: nan,
            energy: nan,
            delta: nan,
            seed: cfg.seeds[0],
            walltime_ms: 0.0,
        };
        s.push_str(&row.csv_row(false));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct RunInfo {
    reference: String,
    delta_reference: String,
    optimizer: Option<&'static str>,
    total_ms: f64,
    walltime_ms: Vec<f64>,
    finished_unix_s: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_r_squared: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a SweepConfig,
    run: RunInfo,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.toml")
}

pub fn plot_path(csv: &Path, curve: &str) -> PathBuf {
    csv.with_extension(format!("{curve}.dat"))
}

/// Writes the CSV, the sidecar (resolved config and timings) and two-column plot data.
pub fn write_outputs(cfg: &SweepConfig, outcome: &SweepOutcome) -> Result<(), ExperimentError> {
    let out = &cfg.output;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    }
    std::fs::write(out, csv_text(cfg, outcome)).map_err(|e| ExperimentError::io(out, e))?;

    let side = Sidecar {
        config: cfg,
        run: RunInfo {
            reference: outcome.reference.clone(),
            delta_reference: outcome.delta_reference.clone(),
            optimizer: (cfg.ansatz == AnsatzKind::Network).then_some(crate::solvers::train::OPTIMIZER_LABEL),
            total_ms: outcome.total_ms,
            walltime_ms: outcome.records.iter().map(|r| r.walltime_ms).collect(),
            finished_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            fit_slope: outcome.fit.as_ref().map(|f| f.slope),
            fit_r_squared: outcome.fit.as_ref().map(|f| f.r_squared),
            rate: outcome.rate,
            failure: outcome.failure.as_ref().map(|f| f.message.clone()),
        },
    };
    let side_path = sidecar_path(out);
    let text = toml::to_string(&side).map_err(|e| ExperimentError::Config(e.to_string()))?;
    std::fs::write(&side_path, text).map_err(|e| ExperimentError::io(&side_path, e))?;

    for (curve, pick) in [("h1", 0usize), ("bdry", 1)] {
        let mut s = String::new();
        for r in &outcome.records {
            let v = if pick == 0 { r.h1_error } else { r.bdry_l2_error };
            let _ = writeln!(s, "{:.16e} {:.16e}", r.scale, v);
        }
        let path = plot_path(out, curve);
        std::fs::write(&path, s).map_err(|e| ExperimentError::io(&path, e))?;
    }
    Ok(())
}

/// [`run_sweep`] followed by [`write_outputs`]; a failed grid point is reported
/// after the partial outputs are on disk.
pub fn run_and_write(cfg: &SweepConfig) -> Result<SweepOutcome, ExperimentError> {
    let outcome = run_sweep(cfg)?;
    write_outputs(cfg, &outcome)?;
    if let Some(f) = &outcome.failure {
        return Err(ExperimentError::SweepFailed {
            scale: f.scale,
            message: f.message.clone(),
            completed: outcome.records.len(),
        });
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::CaseId;

    fn fe_config(dir: &Path) -> SweepConfig {
        SweepConfig {
            case: CaseId::IntervalPoisson,
            scales: vec![4, 8, 16, 32],
            output: dir.join("fe.csv"),
            ..SweepConfig::default()
        }
    }

    #[test]
    fn csv_schema_and_precision() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fe_config(dir.path());
        let out = run_and_write(&cfg).unwrap();
        let text = std::fs::read_to_string(&cfg.output).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 8);
        assert_eq!(first[0], "2.5000000000000000e-1");
        assert_eq!(first[1].parse::<f64>().unwrap(), 4.0);
        assert_eq!(out.records.len(), 4);
        assert!(sidecar_path(&cfg.output).exists());
        assert!(std::fs::read_to_string(plot_path(&cfg.output, "h1")).unwrap().lines().count() == 4);
        let meta = std::fs::read_to_string(sidecar_path(&cfg.output)).unwrap();
        assert!(meta.contains("[config]") && meta.contains("interval_poisson"));
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fe_config(dir.path());
        run_and_write(&cfg).unwrap();
        let a = std::fs::read(&cfg.output).unwrap();
        run_and_write(&cfg).unwrap();
        assert_eq!(a, std::fs::read(&cfg.output).unwrap());
    }

    #[test]
    fn interval_errors_follow_h_with_sigma_one() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = fe_config(dir.path());
        let out = run_sweep(&cfg).unwrap();
        let rate = out.rate.unwrap();
        assert!((rate - 1.0).abs() < 0.1, "{rate}");
        assert!(out.records.iter().all(|r| r.delta == 0.0 && r.h1_error > 0.0));
    }

    #[test]
    fn reference_solve_is_labeled_and_close_to_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = fe_config(dir.path());
        let exact = run_sweep(&cfg).unwrap();
        cfg.reference = ReferenceMode::Solve;
        let refd = run_sweep(&cfg).unwrap();
        assert!(refd.reference.starts_with("reference"));
        for (a, b) in exact.records.iter().zip(&refd.records) {
            assert!((a.h1_error - b.h1_error).abs() < 0.3 * a.h1_error);
        }
    }

    #[test]
    fn network_sweep_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SweepConfig {
            case: CaseId::IntervalPoisson,
            ansatz: AnsatzKind::Network,
            scales: vec![4, 8, 16],
            seeds: vec![1, 2],
            iters: 50,
            lr: 1e-2,
            mesh_resolution: 8,
            output: dir.path().join("nn.csv"),
            ..SweepConfig::default()
        };
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(csv_text(&cfg, &a), csv_text(&cfg, &b));
        assert_eq!(a.records.len(), 6);
        // one seed per width sits on the envelope
        for pair in a.records.chunks(2) {
            assert!(pair.iter().any(|r| r.delta == 0.0));
        }
        assert!(a.delta_reference.contains("empirical lower envelope"));
    }

    #[test]
    fn failing_grid_point_flushes_partial_csv() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SweepConfig {
            case: CaseId::IntervalPoisson,
            ansatz: AnsatzKind::Network,
            scales: vec![2, 4],
            iters: 5,
            lr: 1e6,
            mesh_resolution: 4,
            output: dir.path().join("bad.csv"),
            ..SweepConfig::default()
        };
        let err = run_and_write(&cfg).unwrap_err();
        assert!(matches!(err, ExperimentError::SweepFailed { .. }));
        let text = std::fs::read_to_string(&cfg.output).unwrap();
        assert!(text.lines().last().unwrap().contains("NaN"));
    }
}
