//! Headless scripted runs and parameter sweeps.

use crate::buoyancy::{self, BuoyancyState, DepthLimit};
use crate::config::Scenario;
use crate::gripper::{max_static_lift_kg, GraspOutcome};
use crate::mission::{mission_report, GraspSummary, LogEntry, MissionLog, MissionReport};
use crate::sim::{Model, SimError, Simulation};
use crate::telemetry::{self, TelemetryRecord};
use serde::Serialize;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

/// Ratios between the gripper's maximum static lift and its own mass or its
/// submerged buoyancy, reported side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftRatios {
    pub max_lift_kg: f64,
    pub per_gripper_dry_mass: f64,
    pub per_gripper_submerged_buoyancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub steps: u64,
    #[serde(flatten)]
    pub mission: MissionReport,
    pub max_sustainable_depth: DepthLimit,
    pub lift_ratios: LiftRatios,
    pub clamp_warnings: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TelemetryRecord>,
    pub log: MissionLog,
    pub report: RunReport,
    pub effective_config: String,
}

impl RunOutput {
    pub fn telemetry_csv(&self) -> String {
        telemetry::to_csv(&self.records)
    }

    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serialises");
        s.push('\n');
        s
    }

    /// Writes `telemetry.csv`, `report.json` and `config.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("telemetry.csv"), self.telemetry_csv())?;
        fs::write(dir.join("report.json"), self.report_json())?;
        fs::write(dir.join("config.json"), &self.effective_config)?;
        Ok(())
    }
}

/// Runs a scenario to its duration. With `realtime` the loop is paced to the
/// wall clock.
pub fn run(scenario: &Scenario, realtime: bool) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(scenario.clone())?;
    let total = scenario.total_steps();
    let log_every = scenario.log_every();
    let mut events = scenario.events.clone();
    events.sort_by(|a, b| a.t_s.total_cmp(&b.t_s));
    let mut next_event = 0;

    let mut log = MissionLog {
        start_phase: Some(sim.mission().phase),
        ..Default::default()
    };
    let mut warnings = 0;
    let log_entry = |sim: &Simulation| LogEntry {
        record: sim.telemetry(),
        gripper_pump_on: sim.state().command.gripper_pump_on,
    };
    log.entries.push(log_entry(&sim));

    let started = Instant::now();
    for k in 0..total {
        let t = sim.time();
        if let Some(ch) = scenario.channels_at(t) {
            sim.set_channels(*ch);
        }
        let due = events[next_event..]
            .iter()
            .take_while(|e| e.t_s <= t + 1e-9)
            .count();
        let fired: Vec<_> = events[next_event..next_event + due]
            .iter()
            .map(|e| e.kind)
            .collect();
        next_event += due;

        let step = sim.step(&fired)?;
        warnings += step.warnings.len();
        if (k + 1) % log_every == 0 {
            log.entries.push(log_entry(&sim));
        }
        if realtime {
            let target = Duration::from_secs_f64(sim.time());
            if let Some(wait) = target.checked_sub(started.elapsed()) {
                std::thread::sleep(wait);
            }
        }
    }

    log.transitions = sim.mission().transitions.clone();
    log.abort = sim.mission().abort;
    log.grasp = Some(match sim.state().gripper.held_object {
        Some(_) => GraspSummary::Held,
        None if sim.state().ever_held => GraspSummary::Released,
        None => GraspSummary::NotAttempted,
    });
    log.max_tether_excess_m = sim.max_tether_excess();
    let mission = mission_report(&log).map_err(|e| SimError::Setup(e.to_string()))?;

    let model = sim.model();
    let report = RunReport {
        scenario: scenario.name.clone(),
        steps: total,
        mission,
        max_sustainable_depth: buoyancy::max_sustainable_depth(
            model.budget.dry_total(),
            &model.geom,
            &model.curve,
            &model.water,
        )?,
        lift_ratios: lift_ratios(scenario, model),
        clamp_warnings: warnings,
    };
    Ok(RunOutput {
        records: log.entries.iter().map(|e| e.record.clone()).collect(),
        log,
        report,
        effective_config: {
            let mut s = scenario.to_json_pretty();
            s.push('\n');
            s
        },
    })
}

fn lift_ratios(scenario: &Scenario, model: &Model) -> LiftRatios {
    let g = model.water.gravity;
    let max_lift_kg = max_static_lift_kg(model.retention.sphere_n, g);
    LiftRatios {
        max_lift_kg,
        per_gripper_dry_mass: max_lift_kg / model.budget.gripper,
        per_gripper_submerged_buoyancy: max_lift_kg
            / (scenario.pod.gripper_submerged_buoyancy_n / g),
    }
}

/// Sweepable quantities and the output column each produces.
pub const SWEEP_KEYS: [(&str, &str); 6] = [
    ("depth_m", "retained_fraction"),
    ("servo_u", "pod_volume_m3"),
    ("actuation_servo_u", "actuation_force_n"),
    ("buoyancy_depth_m", "net_buoyancy_n"),
    ("total_mass_kg", "max_depth_m"),
    ("grasp_object_mass_kg", "static_hold"),
];

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("unknown sweep key `{0}`; expected one of: {1}")]
    UnknownKey(String, String),
    #[error("sweep range must be finite")]
    BadRange,
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl SweepError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Sim(e) => e.exit_code(),
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub key: String,
    pub output: String,
    pub rows: Vec<(f64, f64)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{}\n", self.key, self.output);
        for (x, y) in &self.rows {
            let y = if y.is_infinite() {
                "inf".to_string()
            } else if y.is_nan() {
                "nan".to_string()
            } else {
                format!("{y:.9}")
            };
            s.push_str(&format!("{x:.6},{y}\n"));
        }
        s
    }
}

/// Evenly spaced points from `from` to `to`, both included. Zero steps give
/// an empty table and one step gives just `from`.
pub fn sweep(
    key: &str,
    from: f64,
    to: f64,
    steps: usize,
    scenario: &Scenario,
) -> Result<SweepTable, SweepError> {
    let output = SWEEP_KEYS
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, o)| *o)
        .ok_or_else(|| {
            let keys: Vec<_> = SWEEP_KEYS.iter().map(|(k, _)| *k).collect();
            SweepError::UnknownKey(key.to_string(), keys.join(", "))
        })?;
    if !(from.is_finite() && to.is_finite()) {
        return Err(SweepError::BadRange);
    }
    let model = Model::from_scenario(scenario)?;
    let points = (0..steps).map(|i| {
        if steps == 1 {
            from
        } else {
            from + (to - from) * i as f64 / (steps - 1) as f64
        }
    });
    let mut rows = Vec::with_capacity(steps);
    for x in points {
        rows.push((x, evaluate(key, x, &model, scenario)?));
    }
    Ok(SweepTable {
        key: key.to_string(),
        output: output.to_string(),
        rows,
    })
}

fn evaluate(key: &str, x: f64, m: &Model, scenario: &Scenario) -> Result<f64, SimError> {
    let dry = m.budget.dry_total();
    Ok(match key {
        "depth_m" => buoyancy::skin_retained_fraction(x, &m.curve),
        "servo_u" => buoyancy::umbrella_volume(x, &m.geom)?,
        "actuation_servo_u" => buoyancy::actuation_force(x, 0.5, &m.geom, &m.water)?,
        "buoyancy_depth_m" => {
            let s = BuoyancyState::new(1.0, x, &m.geom, &m.curve)?;
            buoyancy::net_buoyancy_force(&s, dry, &m.water)?
        }
        "total_mass_kg" => match buoyancy::max_sustainable_depth(x, &m.geom, &m.curve, &m.water) {
            Ok(limit) => limit.as_f64(),
            Err(buoyancy::BuoyancyError::NoNeutralTrim { .. }) => f64::NAN,
            Err(e) => return Err(e.into()),
        },
        "grasp_object_mass_kg" => {
            let Some(obj) = scenario.objects.get(scenario.mission.target_object) else {
                return Err(SimError::Setup("grasp sweep needs an object".into()));
            };
            let state = crate::gripper::GripperState::with_closure(1.0, &m.gripper);
            let outcome = crate::gripper::grasp_check(
                &state,
                obj,
                x * m.water.gravity,
                &m.retention,
                &m.gripper,
            );
            f64::from(u8::from(outcome == GraspOutcome::Held))
        }
        _ => unreachable!("key checked by caller"),
    })
}
