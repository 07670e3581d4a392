//! Indoor geometry, gesture schedules and per-slot ground truth.
//!
//! Positions are Cartesian `(x, y, z)` in meters with `z` pointing up. The
//! angle of arrival is measured from the vertical through the AP, so that
//! `d cos(theta)` equals the device height relative to the AP. With the AP at
//! the ceiling that relative height is negative and `theta` lies in
//! `(pi/2, pi)`. Gestures only move the device vertically.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, Propagation};
use crate::error::{IsacError, Result};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureKind {
    PickUp,
    PutDown,
}

impl GestureKind {
    fn sign(self) -> f64 {
        match self {
            GestureKind::PickUp => 1.0,
            GestureKind::PutDown => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GesturePhase {
    Idle,
    PickUp,
    PutDown,
}

/// A gesture that starts moving after slot `start_slot` and completes at
/// slot `start_slot + duration_slots`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub start_slot: usize,
    pub kind: GestureKind,
    #[serde(default = "default_gesture_duration")]
    pub duration_slots: usize,
}

fn default_gesture_duration() -> usize {
    10
}

fn default_rcs() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserConfig {
    /// Initial device position, meters.
    pub position: [f64; 3],
    #[serde(default = "default_rcs")]
    pub rcs: f64,
    #[serde(default)]
    pub gestures: Vec<GestureEvent>,
    /// Initial QoS indicator. When absent it is inferred from the initial
    /// device height: closer to `h_pick` than to `h_put` means high demand.
    #[serde(default)]
    pub initial_delta: Option<bool>,
}

/// Standard deviations of the delay and angle measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementNoise {
    /// Seconds.
    pub delay_std: f64,
    /// Radians.
    pub angle_std: f64,
}

impl MeasurementNoise {
    pub const ZERO: Self = Self { delay_std: 0.0, angle_std: 0.0 };
}

/// Standard deviations of the process noise on `(d, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessNoise {
    /// Meters.
    pub distance_std: f64,
    /// Radians.
    pub angle_std: f64,
}

impl ProcessNoise {
    pub const ZERO: Self = Self { distance_std: 0.0, angle_std: 0.0 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub num_antennas: usize,
    /// Element spacing over wavelength.
    #[serde(default = "default_spacing")]
    pub antenna_spacing: f64,
    pub room: [f64; 3],
    pub ap_position: [f64; 3],
    pub users: Vec<UserConfig>,
    /// Seconds.
    pub slot_duration: f64,
    pub num_slots: usize,
    /// Device height after a pick-up, meters.
    pub h_pick: f64,
    /// Device height after a put-down, meters.
    pub h_put: f64,
    /// Hz.
    pub carrier_frequency: f64,
    /// 1/m.
    pub absorption: f64,
    /// Communication receiver noise, watts.
    pub comm_noise: f64,
    /// Echo receiver noise, watts.
    pub sens_noise: f64,
    pub measurement_noise: MeasurementNoise,
    pub process_noise: ProcessNoise,
    pub seed: u64,
}

fn default_spacing() -> f64 {
    0.5
}

impl Default for ScenarioConfig {
    /// Four users in a 5 x 5 x 3 m room with the AP in the ceiling corner,
    /// placed along the room diagonal 2, 2.67, 3.33 and 4 m from the AP.
    /// Three devices are put down from 1.5 m and one is picked up from 1.2 m,
    /// all starting at slot 0.
    fn default() -> Self {
        let user = |d: f64, z: f64, kind| {
            let r = (d * d - (3.0 - z) * (3.0 - z)).sqrt() / std::f64::consts::SQRT_2;
            UserConfig {
                position: [r, r, z],
                rcs: 1.0,
                gestures: vec![GestureEvent { start_slot: 0, kind, duration_slots: 10 }],
                initial_delta: None,
            }
        };
        Self {
            num_antennas: 12,
            antenna_spacing: 0.5,
            room: [5.0, 5.0, 3.0],
            ap_position: [0.0, 0.0, 3.0],
            users: vec![
                user(2.0, 1.5, GestureKind::PutDown),
                user(8.0 / 3.0, 1.2, GestureKind::PickUp),
                user(10.0 / 3.0, 1.5, GestureKind::PutDown),
                user(4.0, 1.5, GestureKind::PutDown),
            ],
            slot_duration: 0.1,
            num_slots: 20,
            h_pick: 1.5,
            h_put: 1.2,
            carrier_frequency: 0.3e12,
            absorption: 0.02,
            comm_noise: crate::dbm_to_watts(-90.0),
            sens_noise: crate::dbm_to_watts(-90.0),
            measurement_noise: MeasurementNoise { delay_std: 0.1e-9, angle_std: 0.5_f64.to_radians() },
            process_noise: ProcessNoise { distance_std: 0.01, angle_std: 0.5_f64.to_radians() },
            seed: 0,
        }
    }
}

/// Ground truth of one user at one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicTruth {
    pub distance: f64,
    pub theta: f64,
    /// Radial velocity towards the AP over the transition to the next slot.
    pub radial_velocity: f64,
    /// Tangential velocity over the transition to the next slot.
    pub tangential_velocity: f64,
    /// `d cos(theta)`, the device height relative to the AP.
    pub height: f64,
    /// Absolute device height above the floor.
    pub z: f64,
    pub phase: GesturePhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// Round-trip delay, seconds.
    pub delay: f64,
    pub theta: f64,
}

/// Immutable realisation of a [`ScenarioConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    geometry: ArrayGeometry,
    propagation: Propagation,
    /// Indexed `[slot][user]`.
    truth: Vec<Vec<KinematicTruth>>,
    initial_delta: Vec<bool>,
}

impl Scenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn propagation(&self) -> &Propagation {
        &self.propagation
    }

    pub fn num_users(&self) -> usize {
        self.config.users.len()
    }

    pub fn num_slots(&self) -> usize {
        self.config.num_slots
    }

    pub fn initial_delta(&self) -> &[bool] {
        &self.initial_delta
    }

    pub fn truth_at(&self, slot: usize) -> Result<&[KinematicTruth]> {
        self.truth
            .get(slot)
            .map(Vec::as_slice)
            .ok_or(IsacError::SlotOutOfRange { slot, num_slots: self.config.num_slots })
    }
}

/// One step of the constant-velocity motion model:
/// `d' = d - v_r T`, `theta' = theta + v_t T / d`.
pub fn motion_step(distance: f64, theta: f64, radial_velocity: f64, tangential_velocity: f64, dt: f64) -> (f64, f64) {
    (distance - radial_velocity * dt, theta + tangential_velocity * dt / distance)
}

fn check_finite_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(IsacError::InvalidConfig(format!("{name} must be finite and non-negative, got {v}")))
    }
}

fn validate(config: &ScenarioConfig) -> Result<()> {
    if config.users.is_empty() {
        return Err(IsacError::InvalidConfig("at least one user is required".into()));
    }
    if !(config.slot_duration > 0.0 && config.slot_duration.is_finite()) {
        return Err(IsacError::InvalidConfig(format!("slot duration must be positive, got {}", config.slot_duration)));
    }
    if config.num_slots == 0 {
        return Err(IsacError::InvalidConfig("at least one slot is required".into()));
    }
    if !(config.h_pick > config.h_put) {
        return Err(IsacError::InvalidConfig(format!(
            "h_pick ({}) must exceed h_put ({})",
            config.h_pick, config.h_put
        )));
    }
    for (name, v) in [
        ("comm_noise", config.comm_noise),
        ("sens_noise", config.sens_noise),
        ("measurement delay std", config.measurement_noise.delay_std),
        ("measurement angle std", config.measurement_noise.angle_std),
        ("process distance std", config.process_noise.distance_std),
        ("process angle std", config.process_noise.angle_std),
    ] {
        check_finite_nonneg(name, v)?;
    }
    if config.room.iter().any(|&r| !(r > 0.0)) {
        return Err(IsacError::InvalidConfig("room dimensions must be positive".into()));
    }
    if !inside(&config.room, &config.ap_position) {
        return Err(IsacError::InvalidConfig("AP position lies outside the room".into()));
    }
    for (k, user) in config.users.iter().enumerate() {
        check_finite_nonneg("rcs", user.rcs)?;
        if !inside(&config.room, &user.position) {
            return Err(IsacError::InvalidConfig(format!("user {k} lies outside the room")));
        }
        let mut events: Vec<&GestureEvent> = user.gestures.iter().collect();
        events.sort_by_key(|e| e.start_slot);
        let mut busy_until = 0;
        for (i, e) in events.iter().enumerate() {
            if e.duration_slots == 0 {
                return Err(IsacError::InvalidConfig(format!("user {k} has a zero-length gesture")));
            }
            if e.start_slot + e.duration_slots >= config.num_slots {
                return Err(IsacError::InvalidConfig(format!(
                    "user {k} gesture at slot {} lasting {} slots extends past {} slots",
                    e.start_slot, e.duration_slots, config.num_slots
                )));
            }
            if i > 0 && e.start_slot < busy_until {
                return Err(IsacError::InvalidConfig(format!("user {k} has overlapping gestures")));
            }
            busy_until = e.start_slot + e.duration_slots;
        }
    }
    Ok(())
}

fn inside(room: &[f64; 3], p: &[f64; 3]) -> bool {
    p.iter().zip(room).all(|(&x, &r)| (0.0..=r).contains(&x))
}

/// Realises the gesture schedule of every user into per-slot ground truth.
pub fn build_scenario(config: ScenarioConfig) -> Result<Scenario> {
    validate(&config)?;
    let geometry = ArrayGeometry::new(config.num_antennas, config.antenna_spacing)?;
    let propagation = Propagation::new(config.carrier_frequency, config.absorption)?;
    let (l_total, dt) = (config.num_slots, config.slot_duration);
    let step = config.h_pick - config.h_put;
    let ap = config.ap_position;

    let mut per_user: Vec<Vec<KinematicTruth>> = Vec::with_capacity(config.users.len());
    for (k, user) in config.users.iter().enumerate() {
        let mut z = vec![user.position[2]; l_total];
        let mut phase = vec![GesturePhase::Idle; l_total];
        for e in &user.gestures {
            let dz = e.kind.sign() * step / e.duration_slots as f64;
            let p = match e.kind {
                GestureKind::PickUp => GesturePhase::PickUp,
                GestureKind::PutDown => GesturePhase::PutDown,
            };
            for l in e.start_slot + 1..=e.start_slot + e.duration_slots {
                phase[l] = p;
            }
            // exact cumulative change avoids drift from repeated additions
            let z0 = z[e.start_slot];
            for l in e.start_slot + 1..l_total {
                let n = (l - e.start_slot).min(e.duration_slots);
                z[l] = if n == e.duration_slots { z0 + e.kind.sign() * step } else { z0 + dz * n as f64 };
            }
        }
        if let Some(l) = z.iter().position(|&zl| !(0.0..=config.room[2]).contains(&zl)) {
            return Err(IsacError::InvalidConfig(format!("user {k} leaves the room at slot {l}")));
        }
        let (dx, dy) = (user.position[0] - ap[0], user.position[1] - ap[1]);
        let horizontal = dx.hypot(dy);
        let polar: Vec<(f64, f64)> = z
            .iter()
            .map(|&zl| {
                let dz = zl - ap[2];
                (horizontal.hypot(dz), horizontal.atan2(dz))
            })
            .collect();
        if let Some(&(d, _)) = polar.iter().find(|(d, _)| !(*d > 0.0)) {
            return Err(IsacError::NonPositiveDistance(d));
        }
        let truth = (0..l_total)
            .map(|l| {
                let (d, theta) = polar[l];
                let (v_r, v_t) = match polar.get(l + 1) {
                    Some(&(d1, theta1)) => ((d - d1) / dt, (theta1 - theta) * d / dt),
                    None => (0.0, 0.0),
                };
                KinematicTruth {
                    distance: d,
                    theta,
                    radial_velocity: v_r,
                    tangential_velocity: v_t,
                    height: d * theta.cos(),
                    z: z[l],
                    phase: phase[l],
                }
            })
            .collect();
        per_user.push(truth);
    }

    let mid = 0.5 * (config.h_pick + config.h_put);
    let initial_delta = config.users.iter().map(|u| u.initial_delta.unwrap_or(u.position[2] >= mid)).collect();
    let truth = (0..l_total).map(|l| per_user.iter().map(|u| u[l]).collect()).collect();
    Ok(Scenario { config, geometry, propagation, truth, initial_delta })
}

/// Ground truth of every user at `slot`.
pub fn ground_truth_at(scenario: &Scenario, slot: usize) -> Result<&[KinematicTruth]> {
    scenario.truth_at(slot)
}

/// Noisy delay/angle observation of `truth`.
pub fn synth_measurement<R: Rng + ?Sized>(
    truth: &KinematicTruth,
    noise: &MeasurementNoise,
    rng: &mut R,
) -> Measurement {
    let n_tau: f64 = rng.sample(StandardNormal);
    let n_theta: f64 = rng.sample(StandardNormal);
    Measurement {
        delay: 2.0 * truth.distance / SPEED_OF_LIGHT + noise.delay_std * n_tau,
        theta: truth.theta + noise.angle_std * n_theta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn idle_config() -> ScenarioConfig {
        ScenarioConfig {
            users: vec![UserConfig { position: [1.0, 2.0, 1.3], rcs: 1.0, gestures: vec![], initial_delta: None }],
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn default_scenario_has_four_ten_slot_gestures() {
        let s = build_scenario(ScenarioConfig::default()).unwrap();
        assert_eq!(s.num_users(), 4);
        for user in &s.config().users {
            assert_eq!(user.gestures.len(), 1);
            assert_eq!(user.gestures[0].duration_slots, 10);
        }
        assert_eq!(s.initial_delta(), &[true, false, true, true]);
    }

    #[test]
    fn idle_user_keeps_height() {
        let s = build_scenario(idle_config()).unwrap();
        let first = s.truth_at(0).unwrap()[0];
        for l in 0..s.num_slots() {
            let t = s.truth_at(l).unwrap()[0];
            assert_eq!(t.distance, first.distance);
            assert_eq!(t.theta, first.theta);
            assert_eq!(t.height, first.height);
            assert_eq!(t.radial_velocity, 0.0);
            assert_eq!(t.tangential_velocity, 0.0);
        }
    }

    #[test]
    fn pick_up_steps_three_centimeters() {
        let s = build_scenario(ScenarioConfig::default()).unwrap();
        let k = 1;
        for l in 1..=10 {
            let dz = s.truth_at(l).unwrap()[k].height - s.truth_at(l - 1).unwrap()[k].height;
            assert_relative_eq!(dz, 0.03, epsilon = 1e-12);
            assert_eq!(s.truth_at(l).unwrap()[k].phase, GesturePhase::PickUp);
        }
        let total = s.truth_at(10).unwrap()[k].z - s.truth_at(0).unwrap()[k].z;
        assert_relative_eq!(total, 0.3, epsilon = 1e-12);
        assert_eq!(s.truth_at(11).unwrap()[k].phase, GesturePhase::Idle);
    }

    #[test]
    fn motion_step_example() {
        let (d1, theta1) = motion_step(2.0, 0.4, 0.5, 0.0, 0.1);
        assert_relative_eq!(d1, 1.95, epsilon = 1e-15);
        assert_eq!(theta1, 0.4);
    }

    #[test]
    fn truth_follows_motion_recursion() {
        let s = build_scenario(ScenarioConfig::default()).unwrap();
        let dt = s.config().slot_duration;
        for l in 1..s.num_slots() {
            for (prev, cur) in s.truth_at(l - 1).unwrap().iter().zip(s.truth_at(l).unwrap()) {
                let (d, theta) =
                    motion_step(prev.distance, prev.theta, prev.radial_velocity, prev.tangential_velocity, dt);
                assert_relative_eq!(d, cur.distance, epsilon = 1e-12);
                assert_relative_eq!(theta, cur.theta, epsilon = 1e-12);
                assert_relative_eq!(cur.height, cur.distance * cur.theta.cos(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn height_is_relative_to_ap() {
        let s = build_scenario(ScenarioConfig::default()).unwrap();
        for t in s.truth_at(0).unwrap() {
            assert_relative_eq!(t.height, t.z - 3.0, epsilon = 1e-12);
            assert!(t.theta > std::f64::consts::FRAC_PI_2 && t.theta < std::f64::consts::PI);
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = ScenarioConfig::default();
        c.users.clear();
        assert!(build_scenario(c).is_err());

        let c = ScenarioConfig { slot_duration: 0.0, ..ScenarioConfig::default() };
        assert!(build_scenario(c).is_err());

        let mut c = ScenarioConfig::default();
        c.h_put = c.h_pick;
        assert!(build_scenario(c).is_err());

        let c = ScenarioConfig { num_slots: 10, ..ScenarioConfig::default() };
        assert!(build_scenario(c).is_err());

        let mut c = ScenarioConfig::default();
        c.users[0].position = [6.0, 0.0, 1.0];
        assert!(build_scenario(c).is_err());

        let mut c = ScenarioConfig::default();
        c.users[0].gestures.push(GestureEvent { start_slot: 5, kind: GestureKind::PickUp, duration_slots: 3 });
        assert!(build_scenario(c).is_err());
    }

    #[test]
    fn out_of_range_slot_is_an_error() {
        let s = build_scenario(ScenarioConfig::default()).unwrap();
        assert!(matches!(ground_truth_at(&s, 20), Err(IsacError::SlotOutOfRange { slot: 20, num_slots: 20 })));
    }

    #[test]
    fn noiseless_measurement_is_exact() {
        let truth = KinematicTruth {
            distance: 1.5,
            theta: 2.1,
            radial_velocity: 0.0,
            tangential_velocity: 0.0,
            height: 1.5 * 2.1f64.cos(),
            z: 0.0,
            phase: GesturePhase::Idle,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = synth_measurement(&truth, &MeasurementNoise::ZERO, &mut rng);
        assert_relative_eq!(m.delay, 1.000_692_285_594_456_1e-8, max_relative = 1e-14);
        assert_eq!(m.theta, 2.1);
    }

    #[test]
    fn measurement_is_reproducible_and_unbiased() {
        let s = build_scenario(ScenarioConfig::default()).unwrap();
        let truth = s.truth_at(3).unwrap()[2];
        let noise = s.config().measurement_noise;
        let a = synth_measurement(&truth, &noise, &mut ChaCha8Rng::seed_from_u64(17));
        let b = synth_measurement(&truth, &noise, &mut ChaCha8Rng::seed_from_u64(17));
        assert_eq!(a, b);

        let n = 20_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tau = 2.0 * truth.distance / SPEED_OF_LIGHT;
        let mean = (0..n).map(|_| synth_measurement(&truth, &noise, &mut rng).delay - tau).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 * noise.delay_std / (n as f64).sqrt(), "mean bias {mean}");
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = ScenarioConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    proptest! {
        #[test]
        fn gesture_heights_are_strictly_monotone(start in 0usize..8, duration in 1usize..12, pick in any::<bool>(), r in 0.3f64..3.0) {
            let mut c = idle_config();
            c.num_slots = start + duration + 2;
            let kind = if pick { GestureKind::PickUp } else { GestureKind::PutDown };
            c.users[0].position = [r, 0.5, if pick { 1.2 } else { 1.5 }];
            c.users[0].gestures = vec![GestureEvent { start_slot: start, kind, duration_slots: duration }];
            let s = build_scenario(c).unwrap();
            let h = |l: usize| s.truth_at(l).unwrap()[0].height;
            for l in start + 1..=start + duration {
                let dh = h(l) - h(l - 1);
                let increasing = dh > 0.0;
                prop_assert_eq!(increasing, pick);
                prop_assert!(dh != 0.0);
            }
            let total = h(start + duration) - h(start);
            prop_assert!((total.abs() - 0.3).abs() < 1e-12);
            prop_assert_eq!(h(start + duration + 1), h(start + duration));
        }
    }
}
