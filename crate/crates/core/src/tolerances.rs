//! Global numerical tolerances shared by every module.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Negative optimization gaps smaller than this are clamped silently.
    pub gap_clamp: f64,
    /// Relative symmetry defect allowed for bilinear forms and assembled matrices.
    pub symmetry: f64,
    /// Relative residual required from the linear solver.
    pub linear_residual: f64,
    /// Relative tolerance of the conjugate-gradient fallback.
    pub cg: f64,
    /// Energy above which training is declared divergent.
    pub divergence_energy: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    gap_clamp: 1e-10,
    symmetry: 1e-12,
    linear_residual: 1e-10,
    cg: 1e-12,
    divergence_energy: 1e6,
};
