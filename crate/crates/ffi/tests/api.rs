use std::ffi::{c_char, CString};
use std::ptr;

use isac_ffi::*;

fn last_error() -> String {
    let n = unsafe { isac_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0u8; n + 1];
    unsafe { isac_last_error_message(buf.as_mut_ptr().cast::<c_char>(), buf.len()) };
    buf.pop();
    String::from_utf8(buf).unwrap()
}

fn config_from(toml: &str) -> Result<*mut IsacConfig, (IsacStatus, String)> {
    let text = CString::new(toml).unwrap();
    let mut cfg = ptr::null_mut();
    match unsafe { isac_config_from_toml(text.as_ptr(), &mut cfg) } {
        IsacStatus::Ok => Ok(cfg),
        s => Err((s, last_error())),
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { std::ffi::CStr::from_ptr(isac_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn episode_round_trip() {
    let cfg = config_from("[scenario]\nnum_slots = 12\n").unwrap();
    let mut users = 0;
    assert_eq!(unsafe { isac_config_num_users(cfg, &mut users) }, IsacStatus::Ok);
    assert_eq!(users, 4);

    let mut ep = ptr::null_mut();
    assert_eq!(unsafe { isac_episode_run(cfg, IsacMode::PowerOnly as u32, 7, &mut ep) }, IsacStatus::Ok);
    let (mut slots, mut k) = (0, 0);
    unsafe {
        assert_eq!(isac_episode_num_slots(ep, &mut slots), IsacStatus::Ok);
        assert_eq!(isac_episode_num_users(ep, &mut k), IsacStatus::Ok);
    }
    assert_eq!((slots, k), (12, 4));

    let mut summary = std::mem::MaybeUninit::<IsacSlotSummary>::uninit();
    assert_eq!(unsafe { isac_episode_slot(ep, 11, summary.as_mut_ptr()) }, IsacStatus::Ok);
    let summary = unsafe { summary.assume_init() };
    assert_eq!(summary.slot, 11);
    assert!(summary.sum_sens_sinr > 0.0);

    let mut sens = 0.0;
    for u in 0..k {
        let mut rec = std::mem::MaybeUninit::<IsacUserRecord>::uninit();
        assert_eq!(unsafe { isac_episode_user(ep, 11, u, rec.as_mut_ptr()) }, IsacStatus::Ok);
        let rec = unsafe { rec.assume_init() };
        assert!(rec.true_distance > 0.0 && (rec.est_distance - rec.true_distance).abs() < 0.5);
        sens += rec.sens_sinr;
    }
    assert!((sens - summary.sum_sens_sinr).abs() <= 1e-9 * summary.sum_sens_sinr);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("ep.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { isac_episode_write_csv(ep, path.as_ptr(), false) }, IsacStatus::Ok);
    let csv = std::fs::read_to_string(dir.path().join("ep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12 * 4);

    unsafe {
        isac_episode_free(ep);
        isac_config_free(cfg);
    }
}

#[test]
fn static_solve_respects_the_budget_order() {
    let cfg = config_from("[scenario]\nnum_antennas = 6\n").unwrap();
    let delta = [true, false, false, false];
    let mut values = Vec::new();
    for dbm in [30.0, 36.0] {
        let mut s = std::mem::MaybeUninit::<IsacSlotSummary>::uninit();
        unsafe {
            assert_eq!(isac_config_set_p_max_dbm(cfg, dbm), IsacStatus::Ok);
            assert_eq!(
                isac_static_solve(cfg, IsacMode::Joint as u32, delta.as_ptr(), 4, s.as_mut_ptr()),
                IsacStatus::Ok
            );
        }
        let s = unsafe { s.assume_init() };
        assert_eq!(s.status, IsacSlotStatus::Optimal);
        values.push(s.sum_sens_sinr);
    }
    assert!(values[1] > values[0], "{values:?}");
    unsafe { isac_config_free(cfg) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let (status, message) = config_from("[run]\npmax = 3\n").unwrap_err();
    assert_eq!(status, IsacStatus::InvalidConfig);
    assert!(message.contains("pmax"), "{message}");

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { isac_config_from_toml(ptr::null(), &mut out) }, IsacStatus::NullPointer);
    assert!(out.is_null());
    assert_eq!(unsafe { isac_config_default(ptr::null_mut()) }, IsacStatus::NullPointer);

    let cfg = config_from("").unwrap();
    let mut ep = ptr::null_mut();
    assert_eq!(unsafe { isac_episode_run(cfg, 9, 0, &mut ep) }, IsacStatus::InvalidArgument);
    assert!(last_error().contains("mode 9"));
    assert_eq!(unsafe { isac_config_set_num_antennas(cfg, 0) }, IsacStatus::InvalidArgument);
    let delta = [true, false];
    let mut s = std::mem::MaybeUninit::<IsacSlotSummary>::uninit();
    assert_eq!(unsafe { isac_static_solve(cfg, 0, delta.as_ptr(), 2, s.as_mut_ptr()) }, IsacStatus::InvalidArgument);

    let missing = CString::new("/nonexistent/isac.toml").unwrap();
    assert_eq!(unsafe { isac_config_load(missing.as_ptr(), &mut out) }, IsacStatus::Io);

    let mut buf = [0 as c_char; 4];
    let n = unsafe { isac_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 3);
    assert_eq!(buf[3], 0);

    let mut cfg_ok = ptr::null_mut();
    assert_eq!(unsafe { isac_config_default(&mut cfg_ok) }, IsacStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe {
        isac_config_free(cfg_ok);
        isac_config_free(cfg);
        isac_config_free(ptr::null_mut());
        isac_episode_free(ptr::null_mut());
    }
}
