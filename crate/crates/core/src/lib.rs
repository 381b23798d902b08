//! Numerical laboratory for stationary and uniformly-rotating vortex sheets.
//!
//! A sheet is a finite union of smooth curves carrying a vorticity strength.
//! The crate evaluates the Birkhoff–Rott integral along the sheet, thickens
//! every curve into an `eps`-thin vortex layer, solves the mapped Poisson
//! problem on each layer and assembles the first-variation functional whose
//! sign separates radial equilibria from obstructed configurations.
//!
//! Modules are layered bottom-up:
//!
//! * [`geometry`]: constant-speed curves, frames, arc-chord and area.
//! * [`birkhoff_rott`]: strengths, configurations, BR and its residuals.
//! * [`layer`]: the layer map, Jacobians, certificates and layer velocity.
//! * [`elliptic`]: the mapped Poisson solver and its estimates.
//! * [`functional`]: `I`, `I~`, `J` and the positivity decomposition.
//! * [`harness`]: scenarios, sweeps, rate fits, artifacts and acceptance.

// `!(x > 0.0)` is used on purpose so NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod birkhoff_rott;
pub mod elliptic;
pub mod error;
pub mod functional;
pub mod geometry;
pub mod harness;
pub mod layer;
pub mod quadrature;
pub mod vec2;

pub use error::{Error, Result};
pub use vec2::Vec2;
