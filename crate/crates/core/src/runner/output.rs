//! CSV writers. Floats are written in scientific notation with 17
//! significant digits, so parsing a value back yields the same `f64`.

use std::path::Path;

use super::{ExperimentRow, SlotRecord, TraceRow};
use crate::error::{IsacError, Result};
use crate::tracker::GestureState;

/// Episode layout: one row per slot and user.
pub const EPISODE_COLUMNS: [&str; 18] = [
    "slot",
    "user",
    "true_distance",
    "true_theta",
    "true_height",
    "est_distance",
    "est_theta",
    "est_height",
    "gesture",
    "delta",
    "gamma",
    "comm_sinr",
    "sens_sinr",
    "user_power",
    "sense_power",
    "sum_sens_sinr",
    "iterations",
    "status",
];

/// Optional trailing episode column written with timing enabled.
pub const WALL_TIME_COLUMN: &str = "wall_time";

pub const TABLE_COLUMNS: [&str; 12] = [
    "kind",
    "axis",
    "mode",
    "seed",
    "status",
    "sum_sens_sinr",
    "mean_sum_sens_sinr",
    "sum_sens_sinr_lifted",
    "iterations",
    "feasible_slots",
    "num_slots",
    "rank_one_qos_violation",
];

pub const TRACE_COLUMNS: [&str; 7] = ["axis", "mode", "seed", "slot", "sum_sens_sinr", "status", "high_qos_users"];

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn gesture(g: GestureState) -> &'static str {
    match g {
        GestureState::Inactive => "inactive",
        GestureState::PickingUp => "picking_up",
        GestureState::PuttingDown => "putting_down",
    }
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let csv_err = |source| IsacError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Never)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| IsacError::Io { path: path.to_path_buf(), source })
}

pub fn emit_episode_csv(records: &[SlotRecord], path: &Path, timing: bool) -> Result<()> {
    let mut header = EPISODE_COLUMNS.to_vec();
    if timing {
        header.push(WALL_TIME_COLUMN);
    }
    let rows = records.iter().flat_map(|r| {
        r.users.iter().enumerate().map(move |(k, u)| {
            let mut row = vec![
                r.slot.to_string(),
                k.to_string(),
                float(u.truth.distance),
                float(u.truth.theta),
                float(u.truth.height),
                float(u.estimate[0]),
                float(u.estimate[1]),
                float(u.est_height),
                gesture(u.gesture).to_string(),
                u8::from(u.delta).to_string(),
                float(u.gamma),
                float(u.comm_sinr),
                float(u.sens_sinr),
                float(r.powers.user[k]),
                float(r.powers.sense),
                float(r.sum_sens_sinr),
                r.iterations.to_string(),
                r.status.as_str().to_string(),
            ];
            if timing {
                row.push(float(r.wall_time));
            }
            row
        })
    });
    write_rows(path, &header, rows)
}

pub fn emit_table_csv(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.kind.as_str().to_string(),
            float(r.axis),
            r.mode.as_str().to_string(),
            r.seed.to_string(),
            r.status.as_str().to_string(),
            float(r.sum_sens_sinr),
            float(r.mean_sum_sens_sinr),
            float(r.sum_sens_sinr_lifted),
            r.iterations.to_string(),
            r.feasible_slots.to_string(),
            r.num_slots.to_string(),
            u8::from(r.rank_one_qos_violation).to_string(),
        ]
    });
    write_rows(path, &TABLE_COLUMNS, rows)
}

pub fn emit_trace_csv(rows: &[TraceRow], path: &Path) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            float(r.axis),
            r.mode.as_str().to_string(),
            r.seed.to_string(),
            r.slot.to_string(),
            float(r.sum_sens_sinr),
            r.status.as_str().to_string(),
            r.high_qos_users.to_string(),
        ]
    });
    write_rows(path, &TRACE_COLUMNS, rows)
}
