//! Digital vision benchmarking.
//!
//! Three psychophysical tests are modelled here: a tumbling-E visual acuity
//! chart, a two-letter Sloan contrast sensitivity chart and a digital
//! 100-hue arrangement test. The crate covers
//!
//! * metric conversions between visual angle, MAR, logMAR, decimal and
//!   Snellen acuity, and Weber contrast / logCS ([`metrics`]);
//! * the bisection staircase that drives the acuity and contrast tests
//!   ([`staircase`]);
//! * cap sets, arrangements and Total Error Score for the hue test ([`hue`]);
//! * display calibration and optotype geometry ([`calibration`]);
//! * simulated observers for headless runs ([`observer`], [`simulation`]);
//! * counterbalanced session plans, trial logs and persistence ([`session`]);
//! * the nonparametric analysis pipeline ([`stats`]).

// `!(x > 0.0)` is used on purpose so NaN is rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod hue;
pub mod metrics;
pub mod observer;
pub mod session;
pub mod simulation;
pub mod staircase;
pub mod stats;

pub use error::{Error, Result};

/// Version stamp written into every session and report document.
pub const ARTIFACT_VERSION: &str = concat!("visbench/", env!("CARGO_PKG_VERSION"));
