//! Ritz method with the boundary penalty for linear elliptic problems.
//!
//! The crate minimizes the penalized energy
//! `E_lambda(u) = 1/2 int A grad u . grad u dx + lambda/2 int_{boundary} u^2 ds - int f u dx`
//! over two kinds of ansatz families (piecewise-linear finite elements and
//! fully-connected networks) and ships the machinery used to check the
//! resulting error behavior: closed-form reference cases, Steklov expansions on
//! the unit disk, the penalty-strength rate algebra and log-log rate fits.

pub mod analysis;
pub mod ansatz;
pub mod experiments;
pub mod geometry;
pub mod solvers;
pub mod tolerances;
pub mod variational;

pub use tolerances::TOLERANCES;
