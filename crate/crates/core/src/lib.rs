//! Gesture-aware indoor THz integrated sensing and communication (ISAC).
//!
//! The crate simulates an access point with a uniform linear array serving
//! `K` single-antenna users while tracking their hand gestures from radar
//! echoes. Each time slot runs the same pipeline:
//!
//! 1. [`tracker`]: EKF prediction of range/angle, height feature, gesture
//!    decision and the resulting QoS indicator.
//! 2. [`signal`]: gesture state mapped to a communication SINR requirement.
//! 3. [`optimizer`]: joint power/beamforming design by the quadratic
//!    transform and alternating optimization, with the beamforming
//!    subproblem solved as a semidefinite relaxation by the in-crate
//!    interior-point [`solver`].
//! 4. [`tracker`]: EKF measurement update.
//!
//! [`runner`] drives whole episodes and parameter sweeps and writes CSV.

pub mod channel;
pub mod config;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod runner;
pub mod scenario;
pub mod signal;
pub mod solver;
pub mod tracker;

pub use error::{IsacError, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}
