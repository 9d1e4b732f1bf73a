//! Scenario files: schema, loading with field-level diagnostics, validation.

use crate::buoyancy::{SkinCompressionCurve, UmbrellaDesign, Water};
use crate::gripper::{GraspObject, GripperConfig, RetentionTable};
use crate::hydro::HydroParams;
use crate::mission::{
    DroneConfig, FlightPlan, GuardConfig, MassBudgetConfig, MissionEvent, MissionPhase,
};
use crate::mixer::{MixerConfig, PowerModel, RcChannels};
use crate::tether::TetherConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {field}: {message}")]
    Parse {
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Reserved; the simulation has no stochastic inputs.
    #[serde(default)]
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_step")]
    pub step_s: f64,
    #[serde(default = "default_log_interval")]
    pub log_interval_s: f64,
    #[serde(default)]
    pub environment: Environment,
    #[serde(default)]
    pub pod: PodConfig,
    #[serde(default)]
    pub mission: MissionConfig,
    #[serde(default)]
    pub objects: Vec<GraspObject>,
    #[serde(default)]
    pub initial: InitialConditions,
    #[serde(default)]
    pub timeline: Vec<TimelineEntry>,
    #[serde(default)]
    pub events: Vec<ScheduledEvent>,
}

fn default_step() -> f64 {
    0.01
}

fn default_log_interval() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Environment {
    pub water: Water,
    /// Depth of the bottom; the pod rests on it. `None` for open water.
    pub bed_depth_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PodConfig {
    pub umbrella: UmbrellaDesign,
    pub skin_curve: SkinCompressionCurve,
    pub hydro: HydroParams,
    pub gripper: GripperConfig,
    pub retention: RetentionTable,
    pub mixer: MixerConfig,
    pub power: PowerModel,
    pub tether: TetherConfig,
    pub mass: MassBudgetConfig,
    /// Servo travel rate, full range per second.
    pub servo_rate_per_s: f64,
    /// Submerged buoyancy of the gripper alone, used only for reporting lift ratios.
    pub gripper_submerged_buoyancy_n: f64,
}

impl Default for PodConfig {
    fn default() -> Self {
        Self {
            umbrella: UmbrellaDesign::default(),
            skin_curve: SkinCompressionCurve::default(),
            hydro: HydroParams::default(),
            gripper: GripperConfig::default(),
            retention: RetentionTable::default(),
            mixer: MixerConfig::default(),
            power: PowerModel::default(),
            tether: TetherConfig::default(),
            mass: MassBudgetConfig::default(),
            servo_rate_per_s: 0.2,
            gripper_submerged_buoyancy_n: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    pub guards: GuardConfig,
    pub drone: DroneConfig,
    pub flight: FlightPlan,
    pub start_phase: MissionPhase,
    /// Leaving this phase completes the mission; used by partial scenarios.
    pub final_phase: Option<MissionPhase>,
    /// Index into `objects` of the grasp target.
    pub target_object: usize,
}

impl Default for MissionConfig {
    fn default() -> Self {
        Self {
            guards: GuardConfig::default(),
            drone: DroneConfig::default(),
            flight: FlightPlan::default(),
            start_phase: MissionPhase::GroundIdle,
            final_phase: None,
            target_object: 0,
        }
    }
}

/// Initial servo setting: a fraction, or `"neutral"` to trim for zero net
/// force at the initial depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServoInit {
    Fraction(f64),
    Named(ServoPreset),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServoPreset {
    Neutral,
}

impl Default for ServoInit {
    fn default() -> Self {
        ServoInit::Named(ServoPreset::Neutral)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConditions {
    pub position_m: [f64; 3],
    pub yaw_deg: f64,
    pub servo: ServoInit,
    pub closure: f64,
    pub tether_length_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineEntry {
    pub t_s: f64,
    pub channels: RcChannels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledEvent {
    pub t_s: f64,
    pub kind: MissionEvent,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Parse {
                field,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Effective configuration with every default filled in.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    /// Steps per logging interval.
    pub fn log_every(&self) -> u64 {
        (self.log_interval_s / self.step_s).round() as u64
    }

    pub fn total_steps(&self) -> u64 {
        (self.duration_s / self.step_s + 1e-9).floor() as u64
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(invalid("duration_s", "must be finite and nonnegative"));
        }
        if !(self.step_s > 0.0 && self.step_s <= 0.1) {
            return Err(invalid("step_s", "must lie in (0, 0.1]"));
        }
        let ratio = self.log_interval_s / self.step_s;
        if !(self.log_interval_s > 0.0 && ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-6) {
            return Err(invalid(
                "log_interval_s",
                "must be a positive whole multiple of step_s",
            ));
        }
        let w = &self.environment.water;
        if !(w.density > 0.0 && w.gravity > 0.0) {
            return Err(invalid(
                "environment.water",
                "density and gravity must be positive",
            ));
        }
        if let Some(bed) = self.environment.bed_depth_m {
            if !(bed > 0.0) {
                return Err(invalid("environment.bed_depth_m", "must be positive"));
            }
        }
        let pod = &self.pod;
        pod.hydro.validate().map_err(|m| invalid("pod.hydro", m))?;
        pod.gripper
            .validate()
            .map_err(|e| invalid("pod.gripper", e.to_string()))?;
        pod.retention
            .validate()
            .map_err(|m| invalid("pod.retention", m))?;
        if !(pod.servo_rate_per_s > 0.0) {
            return Err(invalid("pod.servo_rate_per_s", "must be positive"));
        }
        if !(pod.tether.max_length_m > 0.0 && pod.tether.slack_eps_m >= 0.0) {
            return Err(invalid("pod.tether", "max_length_m must be positive"));
        }
        if !(pod.mixer.winch_speed_max_m_per_s >= 0.0 && pod.mixer.mix_gain >= 0.0) {
            return Err(invalid(
                "pod.mixer",
                "gain and winch speed must be nonnegative",
            ));
        }
        self.mission
            .flight
            .validate()
            .map_err(|m| invalid("mission.flight", m))?;
        let d = &self.mission.drone;
        if !(d.mass_kg > 0.0 && d.max_thrust_kgf > d.mass_kg) {
            return Err(invalid(
                "mission.drone",
                "max thrust must exceed the drone mass",
            ));
        }
        for (phase, t) in &self.mission.guards.timeouts_s {
            if !(*t > 0.0) {
                return Err(invalid(
                    format!("mission.guards.timeouts_s.{phase}"),
                    "must be positive",
                ));
            }
        }
        if self.mission.start_phase.is_terminal() {
            return Err(invalid(
                "mission.start_phase",
                "cannot start in a terminal phase",
            ));
        }
        if !self.objects.is_empty() && self.mission.target_object >= self.objects.len() {
            return Err(invalid(
                "mission.target_object",
                "index outside the object roster",
            ));
        }
        for (i, o) in self.objects.iter().enumerate() {
            o.validate()
                .map_err(|m| invalid(format!("objects[{i}]"), m))?;
        }
        let init = &self.initial;
        if init.position_m[2] < 0.0 {
            return Err(invalid("initial.position_m", "depth must be nonnegative"));
        }
        if let ServoInit::Fraction(u) = init.servo {
            if !(0.0..=1.0).contains(&u) {
                return Err(invalid(
                    "initial.servo",
                    "must lie in [0, 1] or be \"neutral\"",
                ));
            }
        }
        if !(0.0..=1.0).contains(&init.closure) {
            return Err(invalid("initial.closure", "must lie in [0, 1]"));
        }
        if !(0.0..=pod.tether.max_length_m).contains(&init.tether_length_m) {
            return Err(invalid(
                "initial.tether_length_m",
                "must lie in [0, max_length_m]",
            ));
        }
        for (i, pair) in self.timeline.windows(2).enumerate() {
            if !(pair[1].t_s > pair[0].t_s) {
                return Err(invalid(
                    format!("timeline[{}].t_s", i + 1),
                    "timestamps must be strictly increasing",
                ));
            }
        }
        for (i, e) in self.timeline.iter().enumerate() {
            if !(e.t_s.is_finite() && e.t_s >= 0.0) {
                return Err(invalid(format!("timeline[{i}].t_s"), "must be nonnegative"));
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            if !(e.t_s.is_finite() && e.t_s >= 0.0) {
                return Err(invalid(format!("events[{i}].t_s"), "must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Channels scheduled at time `t` (zero-order hold). `None` before the first entry.
    pub fn channels_at(&self, t: f64) -> Option<&RcChannels> {
        let idx = self.timeline.partition_point(|e| e.t_s <= t + 1e-9);
        idx.checked_sub(1).map(|i| &self.timeline[i].channels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = Scenario::from_json(r#"{"name": "m", "duration_s": 1.0}"#).unwrap();
        assert_eq!(s.step_s, 0.01);
        assert_eq!(s.log_every(), 5);
        assert_eq!(s.total_steps(), 100);
        assert_eq!(s.initial.servo, ServoInit::Named(ServoPreset::Neutral));
    }

    #[test]
    fn unknown_field_reports_path() {
        let err = Scenario::from_json(
            "{\"name\": \"m\", \"duration_s\": 1.0,\n \"pod\": {\"hydro\": {\"thrust_max\": 1}}}",
        )
        .unwrap_err();
        match err {
            ConfigError::Parse { field, line, .. } => {
                assert_eq!(field, "pod.hydro.thrust_max");
                assert_eq!(line, 2);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn wrong_type_reports_path() {
        let err = Scenario::from_json(
            r#"{"name": "m", "duration_s": 1.0, "timeline": [{"t_s": 0, "channels": {"thrust": "x"}}]}"#,
        )
        .unwrap_err();
        assert!(
            err.to_string().contains("timeline[0].channels.thrust"),
            "{err}"
        );
    }

    #[test]
    fn timeline_must_increase() {
        let err = Scenario::from_json(
            r#"{"name": "m", "duration_s": 1.0, "timeline": [{"t_s": 1, "channels": {}}, {"t_s": 1, "channels": {}}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("timeline[1].t_s"), "{err}");
    }

    #[test]
    fn servo_accepts_fraction_or_neutral() {
        let s = Scenario::from_json(r#"{"name": "m", "duration_s": 1, "initial": {"servo": 0.3}}"#)
            .unwrap();
        assert_eq!(s.initial.servo, ServoInit::Fraction(0.3));
        assert!(Scenario::from_json(
            r#"{"name": "m", "duration_s": 1, "initial": {"servo": "full"}}"#
        )
        .is_err());
        assert!(Scenario::from_json(
            r#"{"name": "m", "duration_s": 1, "initial": {"servo": 1.5}}"#
        )
        .is_err());
    }

    #[test]
    fn log_interval_must_divide() {
        let err = Scenario::from_json(r#"{"name": "m", "duration_s": 1, "log_interval_s": 0.015}"#)
            .unwrap_err();
        assert!(err.to_string().starts_with("log_interval_s"));
    }

    #[test]
    fn snapshot_round_trips() {
        let s = Scenario::from_json(r#"{"name": "m", "duration_s": 2.5}"#).unwrap();
        let again = Scenario::from_json(&s.to_json_pretty()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn zero_order_hold() {
        let s = Scenario::from_json(
            r#"{"name": "m", "duration_s": 5, "timeline": [
                {"t_s": 1, "channels": {"thrust": 0.5}},
                {"t_s": 2, "channels": {"thrust": 1.0}}]}"#,
        )
        .unwrap();
        assert!(s.channels_at(0.5).is_none());
        assert_eq!(s.channels_at(1.0).unwrap().thrust, 0.5);
        assert_eq!(s.channels_at(1.99).unwrap().thrust, 0.5);
        assert_eq!(s.channels_at(3.0).unwrap().thrust, 1.0);
    }
}
