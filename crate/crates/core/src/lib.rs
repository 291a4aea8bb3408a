//! Concentration analysis for critical elliptic problems with an
//! indefinite weight on a bounded set: geometry of the weight's support,
//! the Robin-type potential `psi`, reduced energies and their critical
//! points, and bubble-level energy diagnostics.

pub mod bubbles;
pub mod critpoints;
pub mod error;
pub mod geometry;
pub mod landscape;
pub mod quadrature;
pub mod sphere;
pub mod vector;

pub use error::{Error, Result};
pub use vector::Vector;
