//! Sustainability model for key-update scheduling in backhaul-aware 5G-V2X.
//!
//! - [`numerics`]: exponential integral and adaptive quadrature.
//! - [`model`]: sustainability, overheads, fail-safe points, feasibility.
//! - [`keychain`]: key derivation hierarchy, session lifecycle, refresh policy.
//! - [`sim`]: seeded Monte Carlo validation of the model's stochastic assumptions.

pub mod numerics;
pub mod model;
pub mod keychain;
pub mod sim;
