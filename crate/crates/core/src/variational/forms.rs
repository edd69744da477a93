use crate::geometry::{DiscreteFunction, Quadrature};
use crate::tolerances::TOLERANCES;
use crate::variational::{BoundaryMode, PenalizedProblem, VariationalError};

/// `a(u, v) = int A grad u . grad v dx` (plus `int u v dx` with the mass term).
pub fn bilinear_a<U, V>(p: &PenalizedProblem, u: &U, v: &V) -> f64
where
    U: DiscreteFunction + ?Sized,
    V: DiscreteFunction + ?Sized,
{
    bilinear_a_on(p, p.mesh.quadrature(), u, v)
}

pub fn bilinear_a_on<U, V>(p: &PenalizedProblem, quad: &Quadrature, u: &U, v: &V) -> f64
where
    U: DiscreteFunction + ?Sized,
    V: DiscreteFunction + ?Sized,
{
    quad.volume
        .iter()
        .map(|q| {
            let (eu, ev) = (u.eval(&q.at), v.eval(&q.at));
            let ag = p.coefficient.apply(q.at.x, eu.grad);
            let mut s = ag[0] * ev.grad[0] + ag[1] * ev.grad[1];
            if p.mass_term {
                s += eu.value * ev.value;
            }
            q.weight * s
        })
        .sum()
}

fn boundary_inner<U, V>(quad: &Quadrature, u: &U, v: &V) -> f64
where
    U: DiscreteFunction + ?Sized,
    V: DiscreteFunction + ?Sized,
{
    quad.boundary
        .iter()
        .map(|q| q.weight * u.eval(&q.at).value * v.eval(&q.at).value)
        .sum()
}

/// `a_lambda(u, v) = a(u, v) + lambda int_{boundary} u v ds`.
pub fn bilinear_a_lambda<U, V>(p: &PenalizedProblem, u: &U, v: &V) -> Result<f64, VariationalError>
where
    U: DiscreteFunction + ?Sized,
    V: DiscreteFunction + ?Sized,
{
    bilinear_a_lambda_on(p, p.mesh.quadrature(), u, v)
}

pub fn bilinear_a_lambda_on<U, V>(
    p: &PenalizedProblem,
    quad: &Quadrature,
    u: &U,
    v: &V,
) -> Result<f64, VariationalError>
where
    U: DiscreteFunction + ?Sized,
    V: DiscreteFunction + ?Sized,
{
    if p.boundary_mode == BoundaryMode::Natural {
        return Err(VariationalError::NaturalModeHasNoPenalty);
    }
    Ok(bilinear_a_on(p, quad, u, v) + p.lambda * boundary_inner(quad, u, v))
}

/// `E_lambda(u) = 1/2 a_lambda(u, u) - int f u dx`, or `1/2 a(u, u) - f(u)` in natural mode.
pub fn energy<U: DiscreteFunction + ?Sized>(p: &PenalizedProblem, u: &U) -> f64 {
    energy_on(p, p.mesh.quadrature(), u)
}

/// Energy evaluated with an explicit quadrature (e.g. Monte-Carlo volume points).
/// Accumulates pointwise so the result agrees bit-for-bit with the network
/// objective evaluated on the same rule.
pub fn energy_on<U: DiscreteFunction + ?Sized>(p: &PenalizedProblem, quad: &Quadrature, u: &U) -> f64 {
    let mut e = 0.0;
    for q in &quad.volume {
        let ev = u.eval(&q.at);
        let ag = p.coefficient.apply(q.at.x, ev.grad);
        let mut density = 0.5 * (ag[0] * ev.grad[0] + ag[1] * ev.grad[1]);
        if p.mass_term {
            density += 0.5 * ev.value * ev.value;
        }
        density -= p.rhs.eval(q.at.x) * ev.value;
        e += q.weight * density;
    }
    let lambda = p.boundary_weight();
    if lambda > 0.0 {
        for q in &quad.boundary {
            let v = u.eval(&q.at).value;
            e += q.weight * 0.5 * lambda * v * v;
        }
    }
    e
}

/// Optimization gap `delta = E(candidate) - reference_min`, clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub delta: f64,
    /// Raw difference before clamping.
    pub raw: f64,
    /// Set when the reference exceeded the candidate energy by more than the clamp tolerance,
    /// i.e. the reference was not a lower bound.
    pub inconsistent: bool,
}

pub fn gap_from_energies(candidate: f64, reference_min: f64) -> Gap {
    let raw = candidate - reference_min;
    Gap {
        delta: raw.max(0.0),
        raw,
        inconsistent: raw < -TOLERANCES.gap_clamp,
    }
}

pub fn optimization_gap<U: DiscreteFunction + ?Sized>(
    p: &PenalizedProblem,
    u: &U,
    reference_min: f64,
) -> Gap {
    gap_from_energies(energy(p, u), reference_min)
}
