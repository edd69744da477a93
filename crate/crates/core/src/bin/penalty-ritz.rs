use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use penalty_ritz::analysis::steklov::{orthonormality_defect, DEFAULT_MODE_COUNT};
use penalty_ritz::analysis::{
    penalty_gap_via_formula, rho_nonuniform, rho_star_nonuniform, rho_star_uniform, rho_uniform, CaseId,
};
use penalty_ritz::ansatz::{Architecture, FiniteElementFamily, NetworkFamily};
use penalty_ritz::experiments::{run_and_write, verify_all, ExperimentError, SweepConfig, VerifyOptions};
use penalty_ritz::geometry::{build_mesh, build_mesh_with_order, difference, norm_parts, DiscreteFunction, DomainKind, Located};
use penalty_ritz::solvers::{solve_linear, train_network, TrainConfig};
use penalty_ritz::variational::PenalizedProblem;

/// Ritz method with a boundary penalty over finite-element and network ansatz families.
#[derive(Parser)]
#[command(name = "penalty-ritz", version)]
struct Cli {
    /// Worker threads for parallel grid points and quadrature (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the penalized energy for one case over one ansatz family.
    Solve(SolveArgs),
    /// Run a refinement sweep described by a config file.
    Sweep(SweepArgs),
    /// Report disk Steklov modes and the reconstruction of the penalty error.
    Steklov(SteklovArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
    /// Tabulate rate exponents over sigma.
    Rates(RatesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Fe,
    Network,
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long, default_value_t = TrainConfig::default().iters)]
    iters: usize,
    #[arg(long, default_value_t = TrainConfig::default().lr)]
    lr: f64,
    /// Network initialization and Monte-Carlo seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo volume samples; 0 uses the mesh quadrature.
    #[arg(long, default_value_t = 0)]
    mc_samples: usize,
    #[arg(long, default_value_t = TrainConfig::default().log_every)]
    log_every: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "interval_poisson")]
    case: CaseId,
    #[arg(long, value_enum, default_value_t = Family::Fe)]
    ansatz: Family,
    #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
    lambda: f64,
    /// Mesh resolution of the elements (fe) or of the quadrature (network).
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    /// Network architecture, e.g. 1-16-16-1:tanh; defaults to two hidden layers of 16.
    #[arg(long)]
    arch: Option<Architecture>,
    #[command(flatten)]
    train: TrainFlags,
    /// Write point values of the solution as plain columns (x [y] u).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the output path of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides sigma.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Overrides the seed list with one seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SteklovArgs {
    #[arg(long, default_value = "disk_mode1")]
    case: CaseId,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_MODE_COUNT)]
    modes: usize,
    #[arg(long, default_value_t = 8)]
    resolution: usize,
    /// Write the reconstruction and the closed form along the x axis.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Perturb a quadrature weight to exercise the failure path.
    #[arg(long)]
    corrupt_quadrature: bool,
    /// Run only these criteria (comma separated ids, 0 to 9).
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u32>>,
    /// Machine-readable report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    #[arg(long, default_value_t = 1.5)]
    s: f64,
    /// Evaluate at one sigma instead of tabulating.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// Write the table as plain columns (sigma rho_uniform rho_nonuniform).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Check(e.to_string())
        }
    }
}

fn check<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Check(e.to_string())
}

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(check)?;
    }
    std::fs::write(path, text).map_err(|e| check(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Steklov(a) => steklov(a),
        Command::Verify(a) => verify(a),
        Command::Rates(a) => rates(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let case = a.case.case();
    let mesh = Arc::new(build_mesh(case.domain(), a.resolution).map_err(usage)?);
    let p = PenalizedProblem::penalty(mesh.clone(), case.coefficient(), case.rhs(), a.lambda).map_err(usage)?;
    let quad = mesh.quadrature();
    let (u, energy): (Box<dyn DiscreteFunction>, f64) = match a.ansatz {
        Family::Fe => {
            let sol = solve_linear(&p, &FiniteElementFamily::new(mesh.clone())).map_err(check)?;
            println!("method        {:?}", sol.method);
            println!("residual      {:.3e}", sol.relative_residual);
            (Box::new(sol.u), sol.energy)
        }
        Family::Network => {
            let d = case.domain().dim();
            let arch = match a.arch {
                Some(arch) => arch,
                None => format!("{d}-16-16-1:tanh").parse().map_err(usage)?,
            };
            let cfg = TrainConfig {
                iters: a.train.iters,
                lr: a.train.lr,
                seed: a.train.seed,
                mc_samples: a.train.mc_samples,
                log_every: a.train.log_every,
                ..TrainConfig::default()
            };
            let fam = NetworkFamily::init(arch.clone(), a.train.seed);
            let r = train_network(&p, &fam, &cfg).map_err(check)?;
            for t in &r.trace {
                println!("iter {:>8}  energy {:.10e}  best {:.10e}", t.iteration, t.energy, t.best_energy);
            }
            println!("architecture  {arch}");
            println!("optimizer     {}", r.optimizer);
            println!("best at       {}", r.best_iteration);
            println!("wall time     {:.3} s", r.wall_time.as_secs_f64());
            (Box::new(r.network), r.best_energy)
        }
    };
    let parts = norm_parts(&difference(&*u, case.u_star()), quad);
    println!("case          {}", a.case);
    println!("lambda        {:.6e}", a.lambda);
    println!("energy        {energy:.16e}");
    println!("h1_error      {:.16e}", (parts.l2_sq + parts.grad_sq).sqrt());
    println!("bdry_l2_error {:.16e}", parts.boundary_sq.sqrt());
    if let Some(gap) = case.penalty_gap(a.lambda) {
        println!("penalty gap   {gap:.16e} (closed form of ||u_lambda - u*||_H1)");
    }
    if let Some(path) = a.out {
        let mut s = String::new();
        for node in &mesh.nodes {
            let v = u.eval(&Located::free(*node)).value;
            match case.domain() {
                DomainKind::Interval => writeln!(s, "{:.16e} {:.16e}", node[0], v),
                _ => writeln!(s, "{:.16e} {:.16e} {:.16e}", node[0], node[1], v),
            }
            .expect("string write");
        }
        write_file(&path, &s)?;
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), Failure> {
    let mut cfg = SweepConfig::load(&a.config)?;
    if let Some(out) = a.out {
        cfg.output = out;
    }
    if let Some(sigma) = a.sigma {
        cfg.sigma = sigma;
    }
    if let Some(seed) = a.seed {
        cfg.seeds = vec![seed];
    }
    cfg.validate()?;
    let outcome = run_and_write(&cfg)?;
    for r in &outcome.records {
        println!(
            "scale {:.6e}  lambda {:.6e}  seed {}  h1 {:.6e}  bdry {:.6e}  delta {:.3e}",
            r.scale, r.lambda, r.seed, r.h1_error, r.bdry_l2_error, r.delta
        );
    }
    println!("reference: {}", outcome.reference);
    println!("delta reference: {}", outcome.delta_reference);
    match (&outcome.fit, outcome.rate) {
        (Some(f), Some(rate)) => println!("fitted rate {rate:.4} (slope {:.4}, r^2 {:.4})", f.slope, f.r_squared),
        _ => println!("no rate fitted"),
    }
    println!("wrote {}", cfg.output.display());
    Ok(())
}

fn steklov(a: SteklovArgs) -> Result<(), Failure> {
    let case = a.case.case();
    if case.domain() != DomainKind::UnitDiskPolar {
        return Err(usage(format!("{} is not a disk case", a.case)));
    }
    let mesh = build_mesh_with_order(DomainKind::UnitDiskPolar, a.resolution, 12).map_err(usage)?;
    let rec = penalty_gap_via_formula(&case, a.lambda, a.modes, &mesh).map_err(usage)?;
    println!("modes {}  lambda {:.6e}  gram deviation {:.3e}", a.modes, a.lambda, orthonormality_defect(&rec.modes, &mesh));
    println!("{:>4} {:>4} {:>5} {:>10} {:>24}", "j", "k", "shape", "mu", "c(lambda)_j");
    for (m, c) in rec.modes.iter().zip(&rec.coeffs) {
        println!("{:>4} {:>4} {:>5?} {:>10.3} {:>24.16e}", m.index, m.frequency, m.shape, m.eigenvalue, c);
    }
    println!("tail estimate {:.3e}", rec.tail_estimate);
    if let Some(w) = &rec.warning {
        println!("warning: {w}");
    }
    if let Some(v) = case.v_lambda(a.lambda) {
        let parts = norm_parts(&difference(&rec, &v), mesh.quadrature());
        println!("h1 distance to closed form {:.3e}", (parts.l2_sq + parts.grad_sq).sqrt());
        if let Some(path) = a.out {
            let mut s = String::new();
            for i in 0..=100 {
                let x = [-1.0 + 2.0 * i as f64 / 100.0, 0.0];
                let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", x[0], rec.at(x).value, v.at(x).value);
            }
            write_file(&path, &s)?;
        }
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let report = verify_all(&VerifyOptions {
        corrupt_quadrature: a.corrupt_quadrature,
        only: a.only,
    });
    print!("{}", report.human());
    if let Some(path) = a.out {
        write_file(&path, &report.csv())?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Check("acceptance checks failed".into()))
    }
}

fn rates(a: RatesArgs) -> Result<(), Failure> {
    let (su, ru) = rho_star_uniform(a.r, a.s).map_err(usage)?;
    let (sn, rn) = rho_star_nonuniform(a.r, a.s).map_err(usage)?;
    println!("r {}  s {}", a.r, a.s);
    println!("uniform:     sigma* {su:.6}  rho* {ru:.6}");
    println!("non-uniform: sigma* {sn:.6}  rho* {rn:.6}");
    let sigmas: Vec<f64> = match a.sigma {
        Some(s) => vec![s],
        None => {
            let n = a.points.max(2);
            (0..n).map(|i| 2.0 * a.s * i as f64 / (n - 1) as f64).collect()
        }
    };
    let mut table = String::new();
    println!("{:>10} {:>12} {:>12}", "sigma", "uniform", "non-uniform");
    for s in sigmas {
        let u = rho_uniform(s, a.r, a.s).map_err(usage)?;
        let n = rho_nonuniform(s, a.r, a.s).map_err(usage)?;
        println!("{s:>10.6} {u:>12.6} {n:>12.6}");
        let _ = writeln!(table, "{s:.16e} {u:.16e} {n:.16e}");
    }
    if let Some(path) = a.out {
        write_file(&path, &table)?;
    }
    Ok(())
}
