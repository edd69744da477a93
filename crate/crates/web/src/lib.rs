//! Browser bindings: penalized 1D profiles, disk reconstructions and rate curves.
//!
//! Every export returns a flat `Float64Array`; the layouts are documented per function.
//! The `*_values` functions are the native entry points used by the bindings and tests.

use std::f64::consts::PI;
use std::sync::Arc;

use penalty_ritz::analysis::{penalty_gap_via_formula, rho_nonuniform, rho_uniform, CaseId};
use penalty_ritz::ansatz::FiniteElementFamily;
use penalty_ritz::geometry::{build_mesh, build_mesh_with_order, difference, h1_norm, DomainKind, Located};
use penalty_ritz::geometry::DiscreteFunction;
use penalty_ritz::solvers::solve_linear;
use penalty_ritz::variational::PenalizedProblem;
use wasm_bindgen::prelude::*;

/// `[gap_fe, gap_exact, x_0, uh_0, ulambda_0, ustar_0, x_1, ...]` on the mesh nodes of (0,1).
pub fn penalty_profile_values(lambda: f64, resolution: usize) -> Result<Vec<f64>, String> {
    let case = CaseId::IntervalPoisson.case();
    let mesh = Arc::new(build_mesh(DomainKind::Interval, resolution).map_err(|e| e.to_string())?);
    let p = PenalizedProblem::penalty(mesh.clone(), case.coefficient(), case.rhs(), lambda).map_err(|e| e.to_string())?;
    let sol = solve_linear(&p, &FiniteElementFamily::new(mesh.clone())).map_err(|e| e.to_string())?;
    let ul = case.u_lambda(lambda).ok_or("no closed form")?;
    let ustar = case.u_star();
    let mut out = vec![
        h1_norm(&difference(&sol.u, &ustar), &mesh),
        case.penalty_gap(lambda).ok_or("no closed form")?,
    ];
    for node in &mesh.nodes {
        let at = Located::free(*node);
        out.extend([node[0], sol.u.eval(&at).value, ul.at(*node).value, ustar.at(*node).value]);
    }
    Ok(out)
}

/// Row-major `grid x grid` samples of the reconstructed `u* - u_lambda` on `[-1,1]^2`
/// (NaN outside the disk), followed by `[h1 distance to the closed form, tail estimate]`.
pub fn steklov_values(case: &str, lambda: f64, modes: usize, grid: usize) -> Result<Vec<f64>, String> {
    let id: CaseId = case.parse().map_err(|e: penalty_ritz::analysis::AnalysisError| e.to_string())?;
    let case = id.case();
    if case.domain() != DomainKind::UnitDiskPolar {
        return Err(format!("{id} is not a disk case"));
    }
    if grid < 2 {
        return Err("grid must be at least 2".into());
    }
    let mesh = build_mesh_with_order(DomainKind::UnitDiskPolar, 6, 8).map_err(|e| e.to_string())?;
    let rec = penalty_gap_via_formula(&case, lambda, modes, &mesh).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(grid * grid + 2);
    for i in 0..grid {
        let y = 1.0 - 2.0 * i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            let x = -1.0 + 2.0 * j as f64 / (grid - 1) as f64;
            out.push(if x * x + y * y <= 1.0 { rec.at([x, y]).value } else { f64::NAN });
        }
    }
    let dist = match case.v_lambda(lambda) {
        Some(v) => h1_norm(&difference(&rec, v), &mesh),
        None => f64::NAN,
    };
    out.extend([dist, rec.tail_estimate]);
    Ok(out)
}

/// `[sigma_0, uniform_0, nonuniform_0, sigma_1, ...]` for sigma on `[0, 2s]`.
pub fn rate_curve_values(r: f64, s: f64, points: usize) -> Result<Vec<f64>, String> {
    let n = points.max(2);
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let sigma = 2.0 * s * i as f64 / (n - 1) as f64;
        out.push(sigma);
        out.push(rho_uniform(sigma, r, s).map_err(|e| e.to_string())?);
        out.push(rho_nonuniform(sigma, r, s).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn penalty_profile(lambda: f64, resolution: usize) -> Result<Vec<f64>, JsError> {
    penalty_profile_values(lambda, resolution).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn steklov_reconstruction(case: &str, lambda: f64, modes: usize, grid: usize) -> Result<Vec<f64>, JsError> {
    steklov_values(case, lambda, modes, grid).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn rate_curves(r: f64, s: f64, points: usize) -> Result<Vec<f64>, JsError> {
    rate_curve_values(r, s, points).map_err(|e| JsError::new(&e))
}

/// Boundary flux of a disk case at angle `theta` (for the page legend).
#[wasm_bindgen]
pub fn disk_flux(case: &str, theta: f64) -> f64 {
    case.parse::<CaseId>()
        .ok()
        .and_then(|id| id.case().boundary_flux(theta.rem_euclid(2.0 * PI)))
        .unwrap_or(f64::NAN)
}
