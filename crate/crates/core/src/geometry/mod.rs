//! Meshes, quadrature rules and discrete norms on the supported domains.

pub mod function;
pub mod mesh;
pub mod norms;
pub mod quadrature;

use thiserror::Error;

pub use function::{check_gradient_field, difference, Analytic, Constant, DiscreteFunction, Eval};
pub use mesh::{
    build_mesh, build_mesh_with_order, BoundaryFacet, BoundaryPoint, DomainKind, DomainMesh, Located,
    QuadPoint, Quadrature,
};
pub use norms::{boundary_l2_norm, h1_norm, h1_seminorm, l2_norm, norm_parts, NormParts};
pub use quadrature::QuadratureRule;

/// Cartesian coordinates; one-dimensional points leave the second slot at zero.
pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("unsupported domain kind `{0}` (expected interval, unit_square or unit_disk_polar)")]
    UnsupportedDomain(String),
    #[error("mesh resolution must be at least 2, got {0}")]
    ResolutionTooSmall(usize),
    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),
}
