//! Ansatz families: linear finite elements and fully-connected networks.

pub mod fe;
pub mod network;
pub mod objective;
pub mod tape;

use thiserror::Error;

use crate::geometry::Point;

pub use fe::{fe_interpolate, FeFunction, FiniteElementFamily, Relocated};
pub use network::{eval_network, Activation, Architecture, NetworkFamily};
pub use objective::{energy_gradient, Sampling};
pub use tape::{Adjoints, GradientTape, Seed};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnsatzError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite network output at point ({}, {})", point[0], point[1])]
    NumericalFailure { point: Point },
}
