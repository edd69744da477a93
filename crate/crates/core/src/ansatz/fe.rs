//! Continuous piecewise-linear (bilinear on polar cells) finite elements.
//!
//! No boundary conditions are built into the space; Dirichlet data is handled
//! by the penalty term.

use std::sync::Arc;

use rand::Rng;

use crate::ansatz::AnsatzError;
use crate::geometry::{DiscreteFunction, DomainKind, DomainMesh, Eval, Located, Point};

#[derive(Debug, Clone)]
pub struct FiniteElementFamily {
    pub mesh: Arc<DomainMesh>,
}

impl FiniteElementFamily {
    pub fn new(mesh: Arc<DomainMesh>) -> Self {
        FiniteElementFamily { mesh }
    }

    /// One degree of freedom per mesh node.
    pub fn dof_count(&self) -> usize {
        self.mesh.node_count()
    }

    pub fn function(&self, coeffs: Vec<f64>) -> Result<FeFunction, AnsatzError> {
        if coeffs.len() != self.dof_count() {
            return Err(AnsatzError::Config(format!(
                "expected {} coefficients, got {}",
                self.dof_count(),
                coeffs.len()
            )));
        }
        Ok(FeFunction {
            mesh: self.mesh.clone(),
            coeffs,
        })
    }

    pub fn zero(&self) -> FeFunction {
        FeFunction {
            mesh: self.mesh.clone(),
            coeffs: vec![0.0; self.dof_count()],
        }
    }

    /// The nodal basis function of node `i`.
    pub fn basis(&self, i: usize) -> FeFunction {
        let mut f = self.zero();
        f.coeffs[i] = 1.0;
        f
    }

    /// Coefficients drawn uniformly from `[-scale, scale]`.
    pub fn random<R: Rng>(&self, rng: &mut R, scale: f64) -> FeFunction {
        FeFunction {
            mesh: self.mesh.clone(),
            coeffs: (0..self.dof_count()).map(|_| rng.gen_range(-scale..=scale)).collect(),
        }
    }

    /// Nodes lying on the boundary.
    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut on = vec![false; self.dof_count()];
        for f in &self.mesh.boundary_facets {
            for &n in &f.nodes {
                on[n] = true;
            }
        }
        on
    }
}

#[derive(Debug, Clone)]
pub struct FeFunction {
    mesh: Arc<DomainMesh>,
    pub coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn mesh(&self) -> &Arc<DomainMesh> {
        &self.mesh
    }

    /// `self + t * other` on the same mesh.
    pub fn axpy(&self, t: f64, other: &FeFunction) -> FeFunction {
        FeFunction {
            mesh: self.mesh.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + t * b)
                .collect(),
        }
    }

    /// Evaluates at an arbitrary point; `None` outside the domain.
    pub fn eval_at(&self, x: Point) -> Option<Eval> {
        let (cell, local) = self.mesh.locate(x)?;
        Some(self.eval(&Located {
            x,
            cell: Some(cell),
            local,
        }))
    }
}

impl DiscreteFunction for FeFunction {
    fn eval(&self, at: &Located) -> Eval {
        let (cell, local) = match at.cell {
            Some(c) => (c, at.local),
            None => match self.mesh.locate(at.x) {
                Some(found) => found,
                None => return Eval::new(f64::NAN, [f64::NAN, f64::NAN]),
            },
        };
        let s = self.mesh.shape(cell, local);
        let mut value = 0.0;
        let mut grad = [0.0, 0.0];
        for k in 0..s.count {
            let c = self.coeffs[s.nodes[k]];
            value += c * s.values[k];
            grad[0] += c * s.grads[k][0];
            grad[1] += c * s.grads[k][1];
        }
        Eval::new(value, grad)
    }

    fn domain_kind(&self) -> Option<DomainKind> {
        Some(self.mesh.kind)
    }
}

/// Evaluates an [`FeFunction`] by point location only, ignoring the cell
/// carried by the quadrature point; needed when the quadrature comes from a
/// different mesh.
#[derive(Debug, Clone, Copy)]
pub struct Relocated<'a>(pub &'a FeFunction);

impl DiscreteFunction for Relocated<'_> {
    fn eval(&self, at: &Located) -> Eval {
        self.0.eval(&Located::free(at.x))
    }

    fn domain_kind(&self) -> Option<DomainKind> {
        self.0.domain_kind()
    }
}

/// Nodal interpolant of `g`.
pub fn fe_interpolate(fam: &FiniteElementFamily, g: impl Fn(Point) -> f64) -> FeFunction {
    FeFunction {
        mesh: fam.mesh.clone(),
        coeffs: fam.mesh.nodes.iter().map(|&x| g(x)).collect(),
    }
}
