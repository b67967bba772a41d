//! Calculus of variations on time scales.
//!
//! Solves Euler–Lagrange boundary-value problems on arbitrary finite time
//! grids, evaluates Noether conserved quantities from variational symmetries,
//! and measures invariance and conservation residuals.

pub mod calculus;
pub mod cli;
pub mod expr;
pub mod noether;
pub mod scenario;
pub mod timescale;
pub mod variational;
