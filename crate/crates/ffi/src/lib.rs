//! C ABI for the `isac-core` simulator.
//!
//! Configurations and episodes are opaque handles owned by the caller and
//! released with their `_free` function. Every fallible call returns an
//! [`IsacStatus`]; outputs go through pointer arguments and are written only
//! on success.

#![allow(clippy::missing_safety_doc)]

mod error;

use std::ffi::{c_char, CStr};
use std::path::PathBuf;

use isac_core::config::FileConfig;
use isac_core::optimizer::SlotStatus;
use isac_core::runner::{emit_episode_csv, run_episode, static_inputs, Mode, SlotRecord};
use isac_core::scenario::build_scenario;
use isac_core::tracker::GestureState;

use error::{guard, Failure};
pub use error::{isac_last_error_message, IsacStatus};

/// Simulator configuration: scenario, power budget, QoS thresholds,
/// optimizer and tracker settings.
pub struct IsacConfig(FileConfig);

/// Per-slot records of one simulated episode.
pub struct IsacEpisode(Vec<SlotRecord>);

/// Design modes accepted as `uint32_t mode`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsacMode {
    Joint = 0,
    PowerOnly = 1,
    BeamOnly = 2,
    StaticNoAdapt = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsacSlotStatus {
    Optimal = 0,
    MaxIters = 1,
    Infeasible = 2,
    InternalError = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsacGesture {
    Inactive = 0,
    PickingUp = 1,
    PuttingDown = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsacSlotSummary {
    pub slot: usize,
    pub status: IsacSlotStatus,
    pub sum_sens_sinr: f64,
    /// Sensing power per sensing beam, watts.
    pub sense_power: f64,
    pub iterations: usize,
    pub rank_one_qos_violation: bool,
    /// Seconds spent in the optimizer.
    pub wall_time: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsacUserRecord {
    pub true_distance: f64,
    pub true_theta: f64,
    pub true_height: f64,
    pub est_distance: f64,
    pub est_theta: f64,
    pub est_height: f64,
    pub gesture: IsacGesture,
    pub delta: bool,
    pub gamma: f64,
    pub comm_sinr: f64,
    pub sens_sinr: f64,
    /// Communication power of this user, watts.
    pub user_power: f64,
}

fn mode_from(raw: u32) -> Result<Mode, Failure> {
    match raw {
        0 => Ok(Mode::Joint),
        1 => Ok(Mode::PowerOnly),
        2 => Ok(Mode::BeamOnly),
        3 => Ok(Mode::StaticNoAdapt),
        _ => Err(Failure::new(IsacStatus::InvalidArgument, format!("unknown mode {raw}"))),
    }
}

fn slot_status(s: SlotStatus) -> IsacSlotStatus {
    match s {
        SlotStatus::Optimal => IsacSlotStatus::Optimal,
        SlotStatus::MaxIters => IsacSlotStatus::MaxIters,
        SlotStatus::Infeasible => IsacSlotStatus::Infeasible,
        SlotStatus::InternalError => IsacSlotStatus::InternalError,
    }
}

unsafe fn borrow<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn borrow_mut<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| Failure::null(name))
}

unsafe fn text<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::new(IsacStatus::InvalidArgument, format!("`{name}` is not valid UTF-8")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let out = borrow_mut(out, "out")?;
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn record(ep: &IsacEpisode, slot: usize) -> Result<&SlotRecord, Failure> {
    ep.0.get(slot).ok_or_else(|| {
        Failure::new(IsacStatus::InvalidArgument, format!("slot {slot} out of range ({} slots)", ep.0.len()))
    })
}

fn summary(r: &SlotRecord) -> IsacSlotSummary {
    IsacSlotSummary {
        slot: r.slot,
        status: slot_status(r.status),
        sum_sens_sinr: r.sum_sens_sinr,
        sense_power: r.powers.sense,
        iterations: r.iterations,
        rank_one_qos_violation: r.rank_one_qos_violation,
        wall_time: r.wall_time,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn isac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a configuration with every default.
#[no_mangle]
pub unsafe extern "C" fn isac_config_default(out: *mut *mut IsacConfig) -> IsacStatus {
    guard(|| store(out, IsacConfig(FileConfig::default())))
}

/// Parses a TOML configuration. Missing sections and keys keep their
/// defaults; unknown keys are an error.
#[no_mangle]
pub unsafe extern "C" fn isac_config_from_toml(toml: *const c_char, out: *mut *mut IsacConfig) -> IsacStatus {
    guard(|| {
        let config = FileConfig::parse(text(toml, "toml")?)?;
        store(out, IsacConfig(config))
    })
}

/// Reads a TOML configuration file.
#[no_mangle]
pub unsafe extern "C" fn isac_config_load(path: *const c_char, out: *mut *mut IsacConfig) -> IsacStatus {
    guard(|| {
        let config = FileConfig::load(&PathBuf::from(text(path, "path")?))?;
        store(out, IsacConfig(config))
    })
}

#[no_mangle]
pub unsafe extern "C" fn isac_config_set_p_max_dbm(config: *mut IsacConfig, p_max_dbm: f64) -> IsacStatus {
    guard(|| {
        let config = borrow_mut(config, "config")?;
        if !p_max_dbm.is_finite() {
            return Err(Failure::new(IsacStatus::InvalidArgument, "power budget must be finite"));
        }
        config.0.run.p_max_dbm = p_max_dbm;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn isac_config_set_num_antennas(config: *mut IsacConfig, num_antennas: usize) -> IsacStatus {
    guard(|| {
        let config = borrow_mut(config, "config")?;
        if num_antennas == 0 {
            return Err(Failure::new(IsacStatus::InvalidArgument, "at least one antenna is required"));
        }
        config.0.scenario.num_antennas = num_antennas;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn isac_config_num_users(config: *const IsacConfig, out: *mut usize) -> IsacStatus {
    guard(|| {
        let n = borrow(config, "config")?.0.scenario.users.len();
        *borrow_mut(out, "out")? = n;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn isac_config_free(config: *mut IsacConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Simulates one episode of the configured scenario. `seed` drives the
/// measurement noise; `mode` is an [`IsacMode`] value.
#[no_mangle]
pub unsafe extern "C" fn isac_episode_run(
    config: *const IsacConfig,
    mode: u32,
    seed: u64,
    out: *mut *mut IsacEpisode,
) -> IsacStatus {
    guard(|| {
        let config = &borrow(config, "config")?.0;
        let mode = mode_from(mode)?;
        borrow_mut(out, "out")?;
        let scenario = build_scenario(config.scenario.clone())?;
        let records = run_episode(&scenario, mode, &config.runner(), seed)?;
        store(out, IsacEpisode(records))
    })
}

#[no_mangle]
pub unsafe extern "C" fn isac_episode_num_slots(episode: *const IsacEpisode, out: *mut usize) -> IsacStatus {
    guard(|| {
        let n = borrow(episode, "episode")?.0.len();
        *borrow_mut(out, "out")? = n;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn isac_episode_num_users(episode: *const IsacEpisode, out: *mut usize) -> IsacStatus {
    guard(|| {
        let n = borrow(episode, "episode")?.0.first().map_or(0, |r| r.users.len());
        *borrow_mut(out, "out")? = n;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn isac_episode_slot(
    episode: *const IsacEpisode,
    slot: usize,
    out: *mut IsacSlotSummary,
) -> IsacStatus {
    guard(|| {
        let s = summary(record(borrow(episode, "episode")?, slot)?);
        *borrow_mut(out, "out")? = s;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn isac_episode_user(
    episode: *const IsacEpisode,
    slot: usize,
    user: usize,
    out: *mut IsacUserRecord,
) -> IsacStatus {
    guard(|| {
        let r = record(borrow(episode, "episode")?, slot)?;
        let u = r.users.get(user).ok_or_else(|| {
            Failure::new(IsacStatus::InvalidArgument, format!("user {user} out of range ({} users)", r.users.len()))
        })?;
        let gesture = match u.gesture {
            GestureState::Inactive => IsacGesture::Inactive,
            GestureState::PickingUp => IsacGesture::PickingUp,
            GestureState::PuttingDown => IsacGesture::PuttingDown,
        };
        *borrow_mut(out, "out")? = IsacUserRecord {
            true_distance: u.truth.distance,
            true_theta: u.truth.theta,
            true_height: u.truth.height,
            est_distance: u.estimate[0],
            est_theta: u.estimate[1],
            est_height: u.est_height,
            gesture,
            delta: u.delta,
            gamma: u.gamma,
            comm_sinr: u.comm_sinr,
            sens_sinr: u.sens_sinr,
            user_power: r.powers.user[user],
        };
        Ok(())
    })
}

/// Writes the episode CSV, with a trailing `wall_time` column if `timing`.
#[no_mangle]
pub unsafe extern "C" fn isac_episode_write_csv(
    episode: *const IsacEpisode,
    path: *const c_char,
    timing: bool,
) -> IsacStatus {
    guard(|| {
        let episode = borrow(episode, "episode")?;
        emit_episode_csv(&episode.0, &PathBuf::from(text(path, "path")?), timing)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn isac_episode_free(episode: *mut IsacEpisode) {
    if !episode.is_null() {
        drop(Box::from_raw(episode));
    }
}

/// Solves one static slot: every user at the mid gesture height with the
/// QoS indicators `delta[0..num_users]`.
#[no_mangle]
pub unsafe extern "C" fn isac_static_solve(
    config: *const IsacConfig,
    mode: u32,
    delta: *const bool,
    num_users: usize,
    out: *mut IsacSlotSummary,
) -> IsacStatus {
    guard(|| {
        let config = &borrow(config, "config")?.0;
        let mode = mode_from(mode)?;
        if delta.is_null() {
            return Err(Failure::null("delta"));
        }
        let delta = std::slice::from_raw_parts(delta, num_users);
        let runner = config.runner();
        let inputs = static_inputs(&config.scenario, &runner, delta)?;
        let sol = mode.solve(&inputs, &runner.ao, None)?;
        *borrow_mut(out, "out")? = IsacSlotSummary {
            slot: 0,
            status: slot_status(sol.status),
            sum_sens_sinr: sol.sum_sens_sinr(),
            sense_power: sol.powers.sense,
            iterations: sol.iterations,
            rank_one_qos_violation: sol.rank_one_qos_violation,
            wall_time: 0.0,
        };
        Ok(())
    })
}
