use super::*;
use crate::scenario::{build_scenario, GestureKind, MeasurementNoise, ProcessNoise, ScenarioConfig};
use crate::signal::sens_sinr;

fn noiseless(mut config: ScenarioConfig) -> ScenarioConfig {
    config.measurement_noise = MeasurementNoise::ZERO;
    config.process_noise = ProcessNoise::ZERO;
    config
}

fn small(num_slots: usize) -> ScenarioConfig {
    let mut c = ScenarioConfig { num_antennas: 6, num_slots, ..ScenarioConfig::default() };
    for u in &mut c.users {
        u.gestures.iter_mut().for_each(|g| g.duration_slots = g.duration_slots.min(num_slots - 1));
    }
    c
}

#[test]
fn zero_noise_detection_fires_at_slot_four() {
    let scenario = build_scenario(noiseless(ScenarioConfig::default())).unwrap();
    let track = run_tracking(&scenario, &TrackerConfig::default(), 1).unwrap();
    for k in 0..scenario.num_users() {
        let first = track.iter().position(|s| s[k].gesture != GestureState::Inactive).unwrap();
        assert_eq!(first, 4, "user {k}");
        let kind = scenario.config().users[k].gestures[0].kind;
        let expected = if kind == GestureKind::PickUp { GestureState::PickingUp } else { GestureState::PuttingDown };
        assert_eq!(track[4][k].gesture, expected);
        assert_eq!(track[4][k].delta, kind == GestureKind::PickUp);
        for slot in &track {
            assert!((slot[k].posterior.x[0] - slot[k].truth.distance).abs() < 1e-9);
            assert!((slot[k].posterior.x[1] - slot[k].truth.theta).abs() < 1e-9);
        }
    }
}

#[test]
fn idle_users_keep_constant_targets_and_performance() {
    let mut config = noiseless(small(4));
    config.users.iter_mut().for_each(|u| u.gestures.clear());
    let scenario = build_scenario(config).unwrap();
    let records = run_episode(&scenario, Mode::Joint, &RunnerConfig::default(), 0).unwrap();
    assert_eq!(records.len(), 4);
    for r in &records {
        assert!(r.status.is_feasible());
        let gammas: Vec<f64> = r.users.iter().map(|u| u.gamma).collect();
        let first: Vec<f64> = records[0].users.iter().map(|u| u.gamma).collect();
        assert_eq!(gammas, first);
        assert!((r.sum_sens_sinr - records[0].sum_sens_sinr).abs() <= 1e-4 * records[0].sum_sens_sinr);
    }
}

#[test]
fn frozen_mode_keeps_initial_indicators() {
    let scenario = build_scenario(noiseless(small(8))).unwrap();
    let records = run_episode(&scenario, Mode::StaticNoAdapt, &RunnerConfig::default(), 0).unwrap();
    for r in &records {
        let delta: Vec<bool> = r.users.iter().map(|u| u.delta).collect();
        assert_eq!(delta, scenario.initial_delta());
    }
    let adaptive = run_episode(&scenario, Mode::Joint, &RunnerConfig::default(), 0).unwrap();
    let delta: Vec<bool> = adaptive[5].users.iter().map(|u| u.delta).collect();
    assert_eq!(delta, vec![false, true, false, false]);
}

#[test]
fn reported_sum_matches_recomputed_sinrs() {
    let scenario = build_scenario(small(3)).unwrap();
    let records = run_episode(&scenario, Mode::Joint, &RunnerConfig::default(), 3).unwrap();
    for r in &records {
        let truth = scenario.truth_at(r.slot).unwrap();
        let pos: Vec<(f64, f64)> = truth.iter().map(|t| (t.distance, t.theta)).collect();
        let (_, echo) = channels_at(&scenario, r.slot, &pos, truth).unwrap();
        let sum: f64 = (0..scenario.num_users())
            .map(|k| sens_sinr(k, &echo[k].g, &r.beams, &r.powers, scenario.config().sens_noise))
            .sum();
        assert!((sum - r.sum_sens_sinr).abs() <= 1e-9 * sum);
    }
}

#[test]
fn episodes_are_deterministic_per_seed() {
    let scenario = build_scenario(small(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("run{i}.csv"))).collect();
    for p in &paths {
        let records = run_episode(&scenario, Mode::Joint, &RunnerConfig::default(), 11).unwrap();
        emit_episode_csv(&records, p, false).unwrap();
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 1 + 3 * 4);
    assert_eq!(text.lines().next().unwrap(), EPISODE_COLUMNS.join(","));
}

#[test]
fn csv_round_trip_and_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    emit_episode_csv(&[], &empty, false).unwrap();
    assert_eq!(std::fs::read_to_string(&empty).unwrap(), EPISODE_COLUMNS.join(",") + "\n");

    let scenario = build_scenario(small(2)).unwrap();
    let records = run_episode(&scenario, Mode::PowerOnly, &RunnerConfig::default(), 2).unwrap();
    let path = dir.path().join("episode.csv");
    emit_episode_csv(&records, &path, true).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header = reader.headers().unwrap().clone();
    assert_eq!(header.len(), EPISODE_COLUMNS.len() + 1);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2 * 4);
    for (i, row) in rows.iter().enumerate() {
        let (r, u) = (&records[i / 4], &records[i / 4].users[i % 4]);
        assert_eq!(row[col("sens_sinr")].parse::<f64>().unwrap(), u.sens_sinr);
        assert_eq!(row[col("est_distance")].parse::<f64>().unwrap(), u.estimate[0]);
        assert_eq!(row[col("sense_power")].parse::<f64>().unwrap(), r.powers.sense);
        assert_eq!(row[col("wall_time")].parse::<f64>().unwrap(), r.wall_time);
    }
}

#[test]
fn single_point_experiment_has_one_row() {
    let spec = ExperimentSpec {
        kind: ExperimentKind::StaticPmaxSweep,
        axis: vec![36.0],
        modes: vec![Mode::Joint],
        seeds: vec![0],
        static_delta: None,
    };
    let base = ScenarioConfig { num_antennas: 6, ..ScenarioConfig::default() };
    let table = run_experiment(&spec, &base, &RunnerConfig::default()).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert!(table.traces.is_empty());
    assert!(table.rows[0].status.is_feasible());
    assert!(table.rows[0].sum_sens_sinr > 0.0);
}

#[test]
fn invalid_specs_are_rejected() {
    let base = ScenarioConfig::default();
    let mut spec = ExperimentSpec {
        kind: ExperimentKind::StaticMSweep,
        axis: vec![8.0, 8.0],
        modes: vec![Mode::Joint],
        seeds: vec![0],
        static_delta: None,
    };
    assert!(run_experiment(&spec, &base, &RunnerConfig::default()).is_err());
    spec.axis = vec![8.5];
    assert!(run_experiment(&spec, &base, &RunnerConfig::default()).is_err());
    spec.axis = vec![8.0];
    spec.modes.clear();
    assert!(run_experiment(&spec, &base, &RunnerConfig::default()).is_err());
}

#[test]
fn modes_parse_from_their_names() {
    for m in Mode::ALL {
        assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
    }
    assert!("both".parse::<Mode>().is_err());
}
