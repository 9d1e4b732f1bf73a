//! Telemetry records and their comma-separated text form.

use crate::mission::MissionPhase;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const CSV_HEADER: &str = "t_s,x_m,y_m,depth_m,roll_deg,pitch_deg,yaw_deg,servo_u,effective_volume_m3,power_w,closure,tether_length_m,phase";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryRecord {
    #[serde(rename = "t_s")]
    pub t: f64,
    #[serde(rename = "x_m")]
    pub x: f64,
    #[serde(rename = "y_m")]
    pub y: f64,
    #[serde(rename = "depth_m")]
    pub depth: f64,
    #[serde(rename = "roll_deg")]
    pub roll: f64,
    #[serde(rename = "pitch_deg")]
    pub pitch: f64,
    #[serde(rename = "yaw_deg")]
    pub yaw: f64,
    pub servo_u: f64,
    #[serde(rename = "effective_volume_m3")]
    pub effective_volume: f64,
    #[serde(rename = "power_w")]
    pub power: f64,
    pub closure: f64,
    #[serde(rename = "tether_length_m")]
    pub tether_length: f64,
    pub phase: MissionPhase,
}

/// Formats without a sign on negative zero so identical states print identically.
fn num(out: &mut String, v: f64, decimals: usize) {
    let v = if v == 0.0 { 0.0 } else { v };
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        out.push_str(&s[1..]);
    } else {
        out.push_str(&s);
    }
}

impl TelemetryRecord {
    pub fn csv_row(&self) -> String {
        let mut out = String::with_capacity(128);
        let cols = [
            (self.t, 3),
            (self.x, 6),
            (self.y, 6),
            (self.depth, 6),
            (self.roll, 4),
            (self.pitch, 4),
            (self.yaw, 4),
            (self.servo_u, 6),
            (self.effective_volume, 9),
            (self.power, 4),
            (self.closure, 6),
            (self.tether_length, 6),
        ];
        for (v, d) in cols {
            num(&mut out, v, d);
            out.push(',');
        }
        let _ = write!(out, "{}", self.phase);
        out
    }
}

pub fn to_csv<'a>(records: impl IntoIterator<Item = &'a TelemetryRecord>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_has_thirteen_columns() {
        assert_eq!(CSV_HEADER.split(',').count(), 13);
        let row = TelemetryRecord::default().csv_row();
        assert_eq!(row.split(',').count(), 13);
    }

    #[test]
    fn zero_record_row() {
        assert_eq!(
            TelemetryRecord::default().csv_row(),
            "0.000,0.000000,0.000000,0.000000,0.0000,0.0000,0.0000,0.000000,0.000000000,0.0000,0.000000,0.000000,GroundIdle"
        );
    }

    #[test]
    fn negative_zero_prints_unsigned() {
        let r = TelemetryRecord {
            x: -0.0,
            y: -1e-12,
            ..Default::default()
        };
        let row = r.csv_row();
        assert!(!row.contains('-'), "{row}");
    }
}
