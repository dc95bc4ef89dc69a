//! Incremental LMS over flat-fading inter-node links: a Monte Carlo ring
//! simulator paired with a closed-form steady-state analysis engine.
//!
//! Modules:
//! - [`model`] — network description: node profiles, channel laws, sampling.
//! - [`theory`] — stability tests, asymptotic bias, steady-state MSD/EMSE/MSE
//!   predictions, a small-step-size approximation, and a scalar fixed-point
//!   cross-check.
//! - [`engine`] — the Monte Carlo simulator with deterministic, counter-based
//!   randomness.
//! - [`config`] — JSON experiment files and their resolution into a
//!   [`model::NetworkConfig`].
//! - [`report`] — CSV emission.

pub mod config;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod model;
pub mod report;
pub mod rng;
pub mod theory;

pub use error::{IlmsError, Result};

/// Power ratio to decibels.
pub fn decibels(linear: f64) -> f64 {
    10.0 * linear.log10()
}
