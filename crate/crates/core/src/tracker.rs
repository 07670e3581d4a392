//! Per-user EKF on `(d, theta)`, height feature and gesture decision.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::scenario::{motion_step, Measurement, MeasurementNoise, ProcessNoise};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureState {
    Inactive,
    PickingUp,
    PuttingDown,
}

/// Reference used for the height change `dh` in the gesture decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionRule {
    /// Against the height at the last confirmed state change.
    Cumulative,
    /// Against the previous slot's height.
    PerSlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Height change threshold, meters.
    pub eps_h: f64,
    pub rule: DetectionRule,
    /// Initial standard deviation of the distance estimate, meters.
    pub initial_distance_std: f64,
    /// Initial standard deviation of the angle estimate, radians.
    pub initial_angle_std: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            eps_h: 0.1,
            rule: DetectionRule::Cumulative,
            initial_distance_std: 0.1,
            initial_angle_std: 1f64.to_radians(),
        }
    }
}

/// Process covariance `Q_s` and measurement covariance `R_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub process: Matrix2<f64>,
    pub measurement: Matrix2<f64>,
}

impl NoiseModel {
    pub fn new(process: &ProcessNoise, measurement: &MeasurementNoise) -> Self {
        Self {
            process: Matrix2::from_diagonal(&Vector2::new(process.distance_std.powi(2), process.angle_std.powi(2))),
            measurement: Matrix2::from_diagonal(&Vector2::new(
                measurement.delay_std.powi(2),
                measurement.angle_std.powi(2),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackState {
    /// `(d, theta)`.
    pub estimate: Vector2<f64>,
    pub mse: Matrix2<f64>,
    pub height_prev: f64,
    pub height_ref: f64,
    pub gesture: GestureState,
    pub delta: bool,
}

impl TrackState {
    pub fn new(distance: f64, theta: f64, config: &TrackerConfig, delta: bool) -> Self {
        let h = height_of(distance, theta);
        Self {
            estimate: Vector2::new(distance, theta),
            mse: Matrix2::from_diagonal(&Vector2::new(
                config.initial_distance_std.powi(2),
                config.initial_angle_std.powi(2),
            )),
            height_prev: h,
            height_ref: h,
            gesture: GestureState::Inactive,
            delta,
        }
    }

    pub fn height(&self) -> f64 {
        height_of(self.estimate[0], self.estimate[1])
    }

    pub fn apply(&mut self, decision: &GestureDecision) {
        self.gesture = decision.gesture;
        self.delta = decision.delta;
        self.height_ref = decision.height_ref;
        self.height_prev = decision.height;
    }
}

/// Predicted or posterior estimate with its MSE matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub x: Vector2<f64>,
    pub mse: Matrix2<f64>,
}

/// State transition `f(x)`.
pub fn propagate(x: &Vector2<f64>, radial_velocity: f64, tangential_velocity: f64, dt: f64) -> Vector2<f64> {
    let (d, theta) = motion_step(x[0], x[1], radial_velocity, tangential_velocity, dt);
    Vector2::new(d, theta)
}

/// Jacobian of [`propagate`] with respect to `(d, theta)`.
pub fn transition_jacobian(x: &Vector2<f64>, tangential_velocity: f64, dt: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, -tangential_velocity * dt / (x[0] * x[0]), 1.0)
}

/// Noiseless measurement `(2d/c, theta)`.
pub fn measurement_fn(x: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(2.0 * x[0] / SPEED_OF_LIGHT, x[1])
}

pub fn measurement_jacobian() -> Matrix2<f64> {
    Matrix2::new(2.0 / SPEED_OF_LIGHT, 0.0, 0.0, 1.0)
}

pub fn predict(
    state: &TrackState,
    radial_velocity: f64,
    tangential_velocity: f64,
    dt: f64,
    noise: &NoiseModel,
) -> Result<Estimate> {
    let x = propagate(&state.estimate, radial_velocity, tangential_velocity, dt);
    if !(x[0] > 0.0) {
        return Err(IsacError::TrackingDivergence(x[0]));
    }
    let f = transition_jacobian(&state.estimate, tangential_velocity, dt);
    Ok(Estimate { x, mse: f * state.mse * f.transpose() + noise.process })
}

/// Measurement update.
///
/// A singular innovation covariance is accepted only when the prior and the
/// measurement already agree; any gain then yields the same posterior.
pub fn update(pred: &Estimate, z: &Measurement, noise: &NoiseModel) -> Result<Estimate> {
    let h = measurement_jacobian();
    let innovation = Vector2::new(z.delay, z.theta) - measurement_fn(&pred.x);
    let s = noise.measurement + h * pred.mse * h.transpose();
    let Some(s_inv) = s.try_inverse().filter(|m| m.iter().all(|v| v.is_finite())) else {
        let mismatch = Vector2::new(innovation[0] * SPEED_OF_LIGHT / 2.0, innovation[1]);
        if mismatch.norm() <= 1e-9 * (1.0 + pred.x.norm()) {
            return Ok(*pred);
        }
        return Err(IsacError::DegenerateUpdate);
    };
    let gain = pred.mse * h.transpose() * s_inv;
    let x = pred.x + gain * innovation;
    let mse = (Matrix2::identity() - gain * h) * pred.mse;
    Ok(Estimate { x, mse: 0.5 * (mse + mse.transpose()) })
}

/// Device height relative to the AP, `d cos(theta)`.
pub fn height_of(distance: f64, theta: f64) -> f64 {
    distance * theta.cos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GestureDecision {
    pub gesture: GestureState,
    pub delta: bool,
    /// Height change the decision was based on.
    pub dh: f64,
    pub height: f64,
    pub height_ref: f64,
}

/// Threshold decision on the height change. A detected pick-up raises the
/// QoS indicator, a put-down lowers it and no change keeps it.
pub fn detect_gesture(state: &TrackState, new_height: f64, eps_h: f64, rule: DetectionRule) -> GestureDecision {
    let reference = match rule {
        DetectionRule::Cumulative => state.height_ref,
        DetectionRule::PerSlot => state.height_prev,
    };
    let dh = new_height - reference;
    let (gesture, delta, height_ref) = if dh >= eps_h {
        (GestureState::PickingUp, true, new_height)
    } else if dh <= -eps_h {
        (GestureState::PuttingDown, false, new_height)
    } else {
        (GestureState::Inactive, state.delta, state.height_ref)
    };
    GestureDecision { gesture, delta, dh, height: new_height, height_ref }
}

/// Normalized estimation error squared `e^T M^-1 e`.
pub fn nees(truth: &Vector2<f64>, estimate: &Estimate) -> Option<f64> {
    let e = truth - estimate.x;
    estimate.mse.try_inverse().map(|inv| (e.transpose() * inv * e)[0])
}
