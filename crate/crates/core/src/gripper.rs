//! Fluidic-elastomer gripper surrogate.
//!
//! Closure is piecewise linear in time: the pump closes the fingers at a fixed
//! rate, the vent valve opens them at another, and with both off the stored
//! pressure keeps the closure where it is.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GripperError {
    #[error("pump and vent valve commanded together")]
    CommandConflict,
    #[error("time step {0} s must be positive")]
    InvalidTimestep(f64),
    #[error("pull trace is empty")]
    EmptyTrace,
    #[error("pull trace contains a non-finite sample")]
    NonFiniteTrace,
    #[error("invalid gripper configuration: {0}")]
    Config(String),
}

/// Closure values this close to an end stop snap onto it.
const END_STOP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GripperConfig {
    pub close_time_s: f64,
    pub open_time_s: f64,
    /// Water held in the finger channels at full closure.
    pub retained_water_kg: f64,
    /// Minimum closure for any hold.
    pub grip_threshold: f64,
    pub min_object_size_m: f64,
    pub max_object_size_m: f64,
}

impl Default for GripperConfig {
    fn default() -> Self {
        Self {
            close_time_s: 20.0,
            open_time_s: 25.0,
            retained_water_kg: 0.050,
            grip_threshold: 0.5,
            min_object_size_m: 0.040,
            max_object_size_m: 0.090,
        }
    }
}

impl GripperConfig {
    pub fn validate(&self) -> Result<(), GripperError> {
        let ok = self.close_time_s > 0.0
            && self.open_time_s > 0.0
            && self.retained_water_kg >= 0.0
            && self.grip_threshold > 0.0
            && self.grip_threshold < 1.0
            && self.min_object_size_m > 0.0
            && self.min_object_size_m < self.max_object_size_m;
        if ok {
            Ok(())
        } else {
            Err(GripperError::Config(
                "times and sizes must be positive, 0 < grip_threshold < 1".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GripperState {
    pub closure: f64,
    pub water_mass: f64,
    pub pump_on: bool,
    pub valve_open: bool,
    /// Index of the held object in the scenario roster.
    pub held_object: Option<usize>,
}

impl GripperState {
    pub fn with_closure(closure: f64, cfg: &GripperConfig) -> Self {
        let closure = closure.clamp(0.0, 1.0);
        Self {
            closure,
            water_mass: cfg.retained_water_kg * closure,
            ..Default::default()
        }
    }
}

/// Advances the fill/vent dynamics by `dt`. A held object is dropped as soon as
/// the closure falls below the grip threshold.
pub fn actuate(
    state: &GripperState,
    pump_on: bool,
    valve_open: bool,
    dt: f64,
    cfg: &GripperConfig,
) -> Result<GripperState, GripperError> {
    if pump_on && valve_open {
        return Err(GripperError::CommandConflict);
    }
    if !(dt > 0.0) {
        return Err(GripperError::InvalidTimestep(dt));
    }
    let rate = if pump_on {
        1.0 / cfg.close_time_s
    } else if valve_open {
        -1.0 / cfg.open_time_s
    } else {
        0.0
    };
    let mut closure = (state.closure + rate * dt).clamp(0.0, 1.0);
    if closure < END_STOP_EPS {
        closure = 0.0;
    } else if closure > 1.0 - END_STOP_EPS {
        closure = 1.0;
    }
    let held_object = state.held_object.filter(|_| closure >= cfg.grip_threshold);
    Ok(GripperState {
        closure,
        water_mass: cfg.retained_water_kg * closure,
        pump_on,
        valve_open,
        held_object,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Sphere,
    Cube,
    Tetrahedron,
    Tube,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspObject {
    #[serde(default)]
    pub name: String,
    pub kind: ObjectKind,
    #[serde(rename = "principal_dimension_m")]
    pub principal_dimension: f64,
    /// Tube diameter; governs the grasp envelope for tubes.
    #[serde(
        rename = "diameter_m",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub diameter: Option<f64>,
    #[serde(rename = "dry_mass_kg")]
    pub dry_mass: f64,
    #[serde(rename = "displaced_volume_m3")]
    pub displaced_volume: f64,
    #[serde(rename = "position_m")]
    pub position: [f64; 3],
}

impl GraspObject {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.principal_dimension > 0.0) {
            return Err("principal_dimension_m must be positive".into());
        }
        if !(self.dry_mass >= 0.0) || !(self.displaced_volume >= 0.0) {
            return Err("dry_mass_kg and displaced_volume_m3 must be nonnegative".into());
        }
        if let Some(d) = self.diameter {
            if !(d > 0.0) {
                return Err("diameter_m must be positive".into());
            }
        }
        Ok(())
    }

    /// The dimension the fingers close around.
    pub fn grip_dimension(&self) -> f64 {
        match (self.kind, self.diameter) {
            (ObjectKind::Tube, Some(d)) => d,
            _ => self.principal_dimension,
        }
    }

    /// Weight minus buoyancy in water of the given density.
    pub fn submerged_weight(&self, water_density: f64, gravity: f64) -> f64 {
        (self.dry_mass - water_density * self.displaced_volume) * gravity
    }
}

/// Retention force at full closure for each object shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetentionTable {
    pub sphere_n: f64,
    pub cube_n: f64,
    pub tetrahedron_n: f64,
    pub tube_n: f64,
    pub custom_n: f64,
}

impl Default for RetentionTable {
    fn default() -> Self {
        Self {
            sphere_n: 8.0,
            cube_n: 4.0,
            tetrahedron_n: 5.0,
            tube_n: 6.0,
            custom_n: 4.0,
        }
    }
}

impl RetentionTable {
    pub fn get(&self, kind: ObjectKind) -> f64 {
        match kind {
            ObjectKind::Sphere => self.sphere_n,
            ObjectKind::Cube => self.cube_n,
            ObjectKind::Tetrahedron => self.tetrahedron_n,
            ObjectKind::Tube => self.tube_n,
            ObjectKind::Custom => self.custom_n,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.sphere_n,
            self.cube_n,
            self.tetrahedron_n,
            self.tube_n,
            self.custom_n,
        ];
        if all.iter().any(|v| !(*v > 0.0)) {
            return Err("retention entries must be positive".into());
        }
        if all.iter().any(|v| *v > self.sphere_n) {
            return Err("the sphere entry must be the table maximum".into());
        }
        Ok(())
    }
}

pub fn retention_force(
    obj: &GraspObject,
    closure: f64,
    table: &RetentionTable,
    cfg: &GripperConfig,
) -> f64 {
    let size = obj.grip_dimension();
    if size < cfg.min_object_size_m || size > cfg.max_object_size_m {
        return 0.0;
    }
    if closure < cfg.grip_threshold {
        return 0.0;
    }
    let ramp = ((closure - cfg.grip_threshold) / (1.0 - cfg.grip_threshold)).min(1.0);
    table.get(obj.kind) * ramp
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspOutcome {
    Held,
    Released,
}

/// `external_pull` is the load trying to pull the object out of the fingers,
/// including its submerged weight when lifting.
pub fn grasp_check(
    state: &GripperState,
    obj: &GraspObject,
    external_pull: f64,
    table: &RetentionTable,
    cfg: &GripperConfig,
) -> GraspOutcome {
    let retention = retention_force(obj, state.closure, table, cfg);
    if retention > 0.0 && retention >= external_pull {
        GraspOutcome::Held
    } else {
        GraspOutcome::Released
    }
}

/// Retention force from a pull-test trace: peak pull minus object weight plus
/// object buoyancy.
pub fn retention_from_trace(
    trace: &[(f64, f64)],
    object_weight: f64,
    object_buoyancy: f64,
) -> Result<f64, GripperError> {
    if trace.is_empty() {
        return Err(GripperError::EmptyTrace);
    }
    if trace.iter().any(|(t, f)| !t.is_finite() || !f.is_finite()) {
        return Err(GripperError::NonFiniteTrace);
    }
    let peak = trace
        .iter()
        .map(|&(_, f)| f)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(peak - object_weight + object_buoyancy)
}

/// Heaviest object whose full weight the fingers can hold at a given retention force.
pub fn max_static_lift_kg(retention_n: f64, gravity: f64) -> f64 {
    retention_n / gravity
}
