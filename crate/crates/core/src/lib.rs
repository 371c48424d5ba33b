//! Obstacle-constrained gradient flow of the elastic energy of graphs.
//!
//! The crate discretizes `E(u) = ∫₀¹ u''² / (1 + u'²)^{5/2} dx` on a uniform
//! grid, advances the constrained flow by minimizing movements, computes the
//! explicit symmetric critical point over a cone obstacle, and carries the
//! rearrangement machinery used to compare profiles with their symmetric
//! decreasing rearrangements.

pub mod critical;
pub mod discretization;
pub mod error;
pub mod flow;
pub mod io;
pub mod quadrature;
pub mod rearrange;
pub mod specialfn;
pub mod validation;

pub use discretization::{GridFunction, Obstacle, ObstacleKind, UniformGrid};
pub use error::{Error, Result};
