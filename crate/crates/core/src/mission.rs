//! Mission phase machine, mass budget, drone payload accounting and the
//! end-of-run report.

use crate::telemetry::TelemetryRecord;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MissionError {
    #[error("mission log is empty")]
    EmptyLog,
    #[error("invalid mass budget: {0}")]
    Budget(String),
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub enum MissionPhase {
    #[default]
    GroundIdle,
    TakeoffFlight,
    TransitFlight,
    WaterLanding,
    DroneOff,
    WinchDeploy,
    UnderwaterTransit,
    Approach,
    Grasping,
    ReturnTransit,
    WinchRetract,
    WaterTakeoff,
    ReturnFlight,
    Complete,
    Aborted,
}

impl MissionPhase {
    /// The nominal sequence, `Complete` last.
    pub const SEQUENCE: [MissionPhase; 14] = [
        MissionPhase::GroundIdle,
        MissionPhase::TakeoffFlight,
        MissionPhase::TransitFlight,
        MissionPhase::WaterLanding,
        MissionPhase::DroneOff,
        MissionPhase::WinchDeploy,
        MissionPhase::UnderwaterTransit,
        MissionPhase::Approach,
        MissionPhase::Grasping,
        MissionPhase::ReturnTransit,
        MissionPhase::WinchRetract,
        MissionPhase::WaterTakeoff,
        MissionPhase::ReturnFlight,
        MissionPhase::Complete,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MissionPhase::GroundIdle => "GroundIdle",
            MissionPhase::TakeoffFlight => "TakeoffFlight",
            MissionPhase::TransitFlight => "TransitFlight",
            MissionPhase::WaterLanding => "WaterLanding",
            MissionPhase::DroneOff => "DroneOff",
            MissionPhase::WinchDeploy => "WinchDeploy",
            MissionPhase::UnderwaterTransit => "UnderwaterTransit",
            MissionPhase::Approach => "Approach",
            MissionPhase::Grasping => "Grasping",
            MissionPhase::ReturnTransit => "ReturnTransit",
            MissionPhase::WinchRetract => "WinchRetract",
            MissionPhase::WaterTakeoff => "WaterTakeoff",
            MissionPhase::ReturnFlight => "ReturnFlight",
            MissionPhase::Complete => "Complete",
            MissionPhase::Aborted => "Aborted",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::SEQUENCE
            .iter()
            .chain(std::iter::once(&MissionPhase::Aborted))
            .copied()
            .find(|p| p.name() == name)
    }

    pub fn code(&self) -> u32 {
        *self as u32
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, MissionPhase::Complete | MissionPhase::Aborted)
    }

    /// The pod is in the water and its dynamics are simulated.
    pub fn pod_in_water(&self) -> bool {
        matches!(
            self,
            MissionPhase::DroneOff
                | MissionPhase::WinchDeploy
                | MissionPhase::UnderwaterTransit
                | MissionPhase::Approach
                | MissionPhase::Grasping
                | MissionPhase::ReturnTransit
                | MissionPhase::WinchRetract
        )
    }

    /// Successor along the nominal sequence.
    pub fn next(&self) -> Option<Self> {
        let i = Self::SEQUENCE.iter().position(|p| p == self)?;
        Self::SEQUENCE.get(i + 1).copied()
    }
}

impl fmt::Display for MissionPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "code", content = "phase")]
pub enum AbortReason {
    Timeout(MissionPhase),
    PilotAbort,
    Overweight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionEvent {
    Takeoff,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuardConfig {
    pub deploy_depth_m: f64,
    pub grasp_hold_s: f64,
    pub approach_radius_m: f64,
    pub capture_radius_m: f64,
    pub stowed_length_m: f64,
    /// Per-phase timeouts in seconds; phases without an entry never time out.
    pub timeouts_s: BTreeMap<MissionPhase, f64>,
}

impl Default for GuardConfig {
    fn default() -> Self {
        let timeouts_s = [
            (MissionPhase::WinchDeploy, 120.0),
            (MissionPhase::Approach, 120.0),
            (MissionPhase::Grasping, 120.0),
            (MissionPhase::WinchRetract, 120.0),
        ]
        .into_iter()
        .collect();
        Self {
            deploy_depth_m: 0.2,
            grasp_hold_s: 2.0,
            approach_radius_m: 1.0,
            capture_radius_m: 0.25,
            stowed_length_m: 0.02,
            timeouts_s,
        }
    }
}

/// Telemetry-derived inputs to the transition guards.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GuardInputs {
    pub time_in_phase: f64,
    pub depth: f64,
    pub drone_altitude: f64,
    /// Horizontal distance from the drone to its current flight target.
    pub drone_to_target: f64,
    pub winch_rate: f64,
    pub tether_length: f64,
    pub target_distance: Option<f64>,
    pub grasp_commanded: bool,
    /// Seconds the object has been held without interruption.
    pub held_for: f64,
    pub payload_ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Transition {
    pub to: MissionPhase,
    pub abort: Option<AbortReason>,
}

impl Transition {
    fn stay(phase: MissionPhase) -> Self {
        Self {
            to: phase,
            abort: None,
        }
    }

    fn abort(reason: AbortReason) -> Self {
        Self {
            to: MissionPhase::Aborted,
            abort: Some(reason),
        }
    }
}

/// Arrival tolerance for kinematic flight targets.
pub const ARRIVAL_TOLERANCE_M: f64 = 0.05;

/// Evaluates the guards of `phase` once. Pure; the caller owns timing state.
pub fn advance(
    phase: MissionPhase,
    inputs: &GuardInputs,
    events: &[MissionEvent],
    cfg: &GuardConfig,
    flight: &FlightPlan,
) -> Transition {
    use MissionPhase::*;
    if phase.is_terminal() {
        return Transition::stay(phase);
    }
    if events.contains(&MissionEvent::Abort) {
        return Transition::abort(AbortReason::PilotAbort);
    }
    if let Some(&limit) = cfg.timeouts_s.get(&phase) {
        if inputs.time_in_phase >= limit {
            return Transition::abort(AbortReason::Timeout(phase));
        }
    }
    let go = |to| Transition { to, abort: None };
    let at_altitude = inputs.drone_altitude >= flight.cruise_altitude_m;
    let arrived = inputs.drone_to_target <= ARRIVAL_TOLERANCE_M;
    match phase {
        GroundIdle if events.contains(&MissionEvent::Takeoff) => {
            if inputs.payload_ok {
                go(TakeoffFlight)
            } else {
                Transition::abort(AbortReason::Overweight)
            }
        }
        TakeoffFlight if at_altitude => go(TransitFlight),
        TransitFlight if arrived => go(WaterLanding),
        WaterLanding if inputs.drone_altitude <= 0.0 => go(DroneOff),
        DroneOff if inputs.winch_rate > 0.0 => go(WinchDeploy),
        WinchDeploy if inputs.depth > cfg.deploy_depth_m => go(UnderwaterTransit),
        UnderwaterTransit
            if inputs
                .target_distance
                .is_some_and(|d| d <= cfg.approach_radius_m) =>
        {
            go(Approach)
        }
        Approach
            if inputs.grasp_commanded
                && inputs
                    .target_distance
                    .is_some_and(|d| d <= cfg.capture_radius_m) =>
        {
            go(Grasping)
        }
        Grasping if inputs.held_for >= cfg.grasp_hold_s => go(ReturnTransit),
        ReturnTransit if inputs.winch_rate < 0.0 => go(WinchRetract),
        WinchRetract if inputs.tether_length <= cfg.stowed_length_m => {
            if inputs.payload_ok {
                go(WaterTakeoff)
            } else {
                Transition::abort(AbortReason::Overweight)
            }
        }
        WaterTakeoff if at_altitude => go(ReturnFlight),
        ReturnFlight if arrived && inputs.drone_altitude <= 0.0 => go(Complete),
        _ => Transition::stay(phase),
    }
}

/// Kinematic flight profile of the carrier drone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlightPlan {
    pub home_m: [f64; 2],
    pub landing_site_m: [f64; 2],
    pub cruise_altitude_m: f64,
    pub climb_rate_m_per_s: f64,
    pub cruise_speed_m_per_s: f64,
}

impl Default for FlightPlan {
    fn default() -> Self {
        Self {
            home_m: [0.0, 0.0],
            landing_site_m: [40.0, 0.0],
            cruise_altitude_m: 10.0,
            climb_rate_m_per_s: 2.0,
            cruise_speed_m_per_s: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DroneState {
    pub position: [f64; 2],
    pub altitude: f64,
}

impl FlightPlan {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.cruise_altitude_m > 0.0
            && self.climb_rate_m_per_s > 0.0
            && self.cruise_speed_m_per_s > 0.0)
        {
            return Err("flight altitudes and rates must be positive".into());
        }
        Ok(())
    }

    /// Horizontal target of the drone during `phase`.
    pub fn target(&self, phase: MissionPhase) -> [f64; 2] {
        match phase {
            MissionPhase::GroundIdle | MissionPhase::ReturnFlight | MissionPhase::Complete => {
                self.home_m
            }
            _ => self.landing_site_m,
        }
    }

    /// Moves the drone one step along the scripted profile for `phase`.
    pub fn fly(&self, drone: &DroneState, phase: MissionPhase, dt: f64) -> DroneState {
        use MissionPhase::*;
        let mut d = *drone;
        let climb = self.climb_rate_m_per_s * dt;
        let toward = |d: &mut DroneState, target: [f64; 2]| {
            let (dx, dy) = (target[0] - d.position[0], target[1] - d.position[1]);
            let dist = dx.hypot(dy);
            let reach = self.cruise_speed_m_per_s * dt;
            if dist <= reach {
                d.position = target;
            } else {
                d.position[0] += dx / dist * reach;
                d.position[1] += dy / dist * reach;
            }
        };
        match phase {
            TakeoffFlight | WaterTakeoff => {
                d.altitude = (d.altitude + climb).min(self.cruise_altitude_m);
            }
            TransitFlight => toward(&mut d, self.landing_site_m),
            WaterLanding => d.altitude = (d.altitude - climb).max(0.0),
            ReturnFlight => {
                let home = self.home_m;
                if d.position == home {
                    d.altitude = (d.altitude - climb).max(0.0);
                } else {
                    toward(&mut d, home);
                }
            }
            _ => {}
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DroneModel {
    pub mass_kg: f64,
    pub max_thrust_kgf: f64,
}

impl Default for DroneModel {
    fn default() -> Self {
        Self {
            mass_kg: 7.0,
            max_thrust_kgf: 9.8,
        }
    }
}

impl DroneModel {
    pub fn payload_capacity_kg(&self) -> f64 {
        self.max_thrust_kgf - self.mass_kg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DroneConfig {
    pub mass_kg: f64,
    pub max_thrust_kgf: f64,
}

impl Default for DroneConfig {
    fn default() -> Self {
        let d = DroneModel::default();
        Self {
            mass_kg: d.mass_kg,
            max_thrust_kgf: d.max_thrust_kgf,
        }
    }
}

impl From<DroneConfig> for DroneModel {
    fn from(c: DroneConfig) -> Self {
        Self {
            mass_kg: c.mass_kg,
            max_thrust_kgf: c.max_thrust_kgf,
        }
    }
}

/// Component masses of the pod-gripper system. Skin, gripper and the dry
/// total are fixed; the other entries are normalised onto the dry total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MassBudgetConfig {
    pub pod_structure_kg: f64,
    pub skin_kg: f64,
    pub gripper_kg: f64,
    pub camera_case_kg: f64,
    pub electronics_kg: f64,
    pub cable_winch_kg: f64,
    pub dry_total_kg: f64,
}

impl Default for MassBudgetConfig {
    fn default() -> Self {
        Self {
            pod_structure_kg: 0.300,
            skin_kg: 0.110,
            gripper_kg: 0.300,
            camera_case_kg: 0.150,
            electronics_kg: 0.220,
            cable_winch_kg: 0.270,
            dry_total_kg: 1.080,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassBudget {
    pub pod_structure: f64,
    pub skin: f64,
    pub gripper: f64,
    pub camera_case: f64,
    pub electronics: f64,
    pub cable_winch: f64,
    pub retained_water: f64,
    pub held_object: f64,
}

impl MassBudget {
    pub fn from_config(cfg: &MassBudgetConfig) -> Result<Self, MissionError> {
        let all = [
            cfg.pod_structure_kg,
            cfg.skin_kg,
            cfg.gripper_kg,
            cfg.camera_case_kg,
            cfg.electronics_kg,
            cfg.cable_winch_kg,
        ];
        if all.iter().any(|m| !(m.is_finite() && *m >= 0.0)) || !(cfg.dry_total_kg > 0.0) {
            return Err(MissionError::Budget("masses must be nonnegative".into()));
        }
        let free = cfg.pod_structure_kg + cfg.camera_case_kg + cfg.electronics_kg;
        let remaining = cfg.dry_total_kg - cfg.skin_kg - cfg.gripper_kg;
        if !(free > 0.0 && remaining > 0.0) {
            return Err(MissionError::Budget(
                "skin and gripper leave no room under the dry total".into(),
            ));
        }
        let k = remaining / free;
        Ok(Self {
            pod_structure: cfg.pod_structure_kg * k,
            skin: cfg.skin_kg,
            gripper: cfg.gripper_kg,
            camera_case: cfg.camera_case_kg * k,
            electronics: cfg.electronics_kg * k,
            cable_winch: cfg.cable_winch_kg,
            retained_water: 0.0,
            held_object: 0.0,
        })
    }

    /// Pod and gripper without water, cable or payload.
    pub fn dry_total(&self) -> f64 {
        self.pod_structure + self.skin + self.gripper + self.camera_case + self.electronics
    }

    /// Mass the underwater dynamics see. The cable hangs from the drone and is not included.
    pub fn submerged_total(&self) -> f64 {
        self.dry_total() + self.retained_water + self.held_object
    }

    /// Everything the drone lifts out of the water.
    pub fn carried_total(&self) -> f64 {
        self.dry_total() + self.cable_winch + self.retained_water + self.held_object
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum PayloadStatus {
    Ok { margin_kg: f64 },
    Overweight { excess_kg: f64 },
}

impl PayloadStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, PayloadStatus::Ok { .. })
    }
}

pub fn payload_check(budget: &MassBudget, drone: &DroneModel) -> PayloadStatus {
    let diff = drone.payload_capacity_kg() - budget.carried_total();
    if diff >= -1e-12 {
        PayloadStatus::Ok {
            margin_kg: diff.max(0.0),
        }
    } else {
        PayloadStatus::Overweight { excess_kg: -diff }
    }
}

/// Stateful wrapper around [`advance`]: phase timing, hold timer and transition log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mission {
    pub phase: MissionPhase,
    pub entered_at: f64,
    pub abort: Option<AbortReason>,
    /// Leaving this phase completes the mission.
    pub final_phase: Option<MissionPhase>,
    pub transitions: Vec<PhaseTransition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseTransition {
    pub t: f64,
    pub from: MissionPhase,
    pub to: MissionPhase,
}

impl Mission {
    pub fn new(start: MissionPhase, final_phase: Option<MissionPhase>, t: f64) -> Self {
        Self {
            phase: start,
            entered_at: t,
            abort: None,
            final_phase,
            transitions: Vec::new(),
        }
    }

    pub fn time_in_phase(&self, t: f64) -> f64 {
        t - self.entered_at
    }

    /// Applies one guard evaluation at time `t`; returns the transition taken, if any.
    pub fn update(
        &mut self,
        t: f64,
        inputs: &GuardInputs,
        events: &[MissionEvent],
        cfg: &GuardConfig,
        flight: &FlightPlan,
    ) -> Option<PhaseTransition> {
        let mut tr = advance(self.phase, inputs, events, cfg, flight);
        if tr.to == self.phase {
            return None;
        }
        if tr.abort.is_none() && self.final_phase == Some(self.phase) {
            tr.to = MissionPhase::Complete;
        }
        let record = PhaseTransition {
            t,
            from: self.phase,
            to: tr.to,
        };
        self.phase = tr.to;
        self.entered_at = t;
        self.abort = tr.abort;
        self.transitions.push(record);
        Some(record)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspSummary {
    Held,
    Released,
    NotAttempted,
}

/// One logged sample: the telemetry row plus fields the report needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEntry {
    pub record: TelemetryRecord,
    pub gripper_pump_on: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MissionLog {
    pub entries: Vec<LogEntry>,
    pub transitions: Vec<PhaseTransition>,
    pub start_phase: Option<MissionPhase>,
    pub abort: Option<AbortReason>,
    pub grasp: Option<GraspSummary>,
    pub max_tether_excess_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpan {
    pub phase: MissionPhase,
    pub entered_s: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionReport {
    pub final_phase: MissionPhase,
    pub abort_reason: Option<AbortReason>,
    pub phases: Vec<PhaseSpan>,
    pub duration_s: f64,
    pub energy_j: f64,
    pub peak_power_w: f64,
    pub mean_power_w: f64,
    /// Mean power over samples with the gripper pump running.
    pub grasp_mean_power_w: Option<f64>,
    pub max_depth_m: f64,
    pub grasp_outcome: GraspSummary,
    pub max_tether_excess_m: f64,
}

/// Trapezoidal integral of power over the logged samples.
pub fn energy_integral(entries: &[LogEntry]) -> f64 {
    entries
        .windows(2)
        .map(|w| 0.5 * (w[0].record.power + w[1].record.power) * (w[1].record.t - w[0].record.t))
        .sum()
}

pub fn mission_report(log: &MissionLog) -> Result<MissionReport, MissionError> {
    let first = log.entries.first().ok_or(MissionError::EmptyLog)?;
    let last = log.entries.last().ok_or(MissionError::EmptyLog)?;
    let (t0, t1) = (first.record.t, last.record.t);

    let mut phases = Vec::new();
    let mut current = (log.start_phase.unwrap_or(first.record.phase), t0);
    for tr in &log.transitions {
        phases.push(PhaseSpan {
            phase: current.0,
            entered_s: current.1,
            duration_s: tr.t - current.1,
        });
        current = (tr.to, tr.t);
    }
    phases.push(PhaseSpan {
        phase: current.0,
        entered_s: current.1,
        duration_s: (t1 - current.1).max(0.0),
    });

    let powers: Vec<f64> = log.entries.iter().map(|e| e.record.power).collect();
    let grasp: Vec<f64> = log
        .entries
        .iter()
        .filter(|e| e.gripper_pump_on)
        .map(|e| e.record.power)
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    Ok(MissionReport {
        final_phase: current.0,
        abort_reason: log.abort,
        phases,
        duration_s: t1 - t0,
        energy_j: energy_integral(&log.entries),
        peak_power_w: powers.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        mean_power_w: mean(&powers),
        grasp_mean_power_w: (!grasp.is_empty()).then(|| mean(&grasp)),
        max_depth_m: log
            .entries
            .iter()
            .map(|e| e.record.depth)
            .fold(0.0, f64::max),
        grasp_outcome: log.grasp.unwrap_or(GraspSummary::NotAttempted),
        max_tether_excess_m: log.max_tether_excess_m,
    })
}
