//! Four-DOF rigid-body dynamics of the pod: surge, heave, pitch and yaw are
//! actuated; roll is passive and held level by the buoyant camera case.
//!
//! Frame conventions: `z` is depth (positive down), pitch is positive nose-up,
//! yaw is positive counter-clockwise seen from above, measured from the x axis.
//! Surge velocity is horizontal along the heading; heave velocity is vertical,
//! positive down. Sway is not modelled.

use crate::mixer::ActuatorCommand;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HydroError {
    #[error("time step {0} s outside (0, 0.1]")]
    InvalidTimestep(f64),
    #[error("integration fault at t = {t} s: non-finite {what}")]
    IntegrationFault { t: f64, what: &'static str },
    #[error("mass {0} kg must be positive")]
    NonPositiveMass(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Depth, positive down.
    pub z: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub surge: f64,
    pub heave: f64,
    pub roll_rate: f64,
    pub pitch_rate: f64,
    pub yaw_rate: f64,
    pub t: f64,
}

impl VehicleState {
    pub fn at(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            z,
            yaw,
            ..Default::default()
        }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// World-frame velocity.
    pub fn velocity(&self) -> [f64; 3] {
        [
            self.surge * self.yaw.cos(),
            self.surge * self.yaw.sin(),
            self.heave,
        ]
    }

    fn check_finite(&self) -> Result<(), HydroError> {
        let fields = [
            ("position", self.x),
            ("position", self.y),
            ("depth", self.z),
            ("attitude", self.roll),
            ("attitude", self.pitch),
            ("attitude", self.yaw),
            ("velocity", self.surge),
            ("velocity", self.heave),
            ("rate", self.roll_rate),
            ("rate", self.pitch_rate),
            ("rate", self.yaw_rate),
        ];
        for (what, v) in fields {
            if !v.is_finite() {
                return Err(HydroError::IntegrationFault { t: self.t, what });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HydroParams {
    /// Quadratic drag, kg/m.
    pub surge_drag_kg_per_m: f64,
    pub heave_drag_kg_per_m: f64,
    /// Effective-mass factors including added mass.
    pub surge_mass_factor: f64,
    pub heave_mass_factor: f64,
    pub roll_inertia_kg_m2: f64,
    pub pitch_inertia_kg_m2: f64,
    pub yaw_inertia_kg_m2: f64,
    pub thrust_max_n: f64,
    pub pitch_thrust_max_n: f64,
    /// Lateral offset of each thrust pump from the centreline.
    pub thrust_arm_m: f64,
    pub pitch_arm_m: f64,
    pub roll_stiffness_nm_per_rad: f64,
    pub pitch_stiffness_nm_per_rad: f64,
    pub roll_damping_nms_per_rad: f64,
    pub pitch_damping_nms_per_rad: f64,
    pub yaw_damping_nms_per_rad: f64,
}

impl Default for HydroParams {
    fn default() -> Self {
        Self {
            surge_drag_kg_per_m: 4.0,
            heave_drag_kg_per_m: 18.0,
            surge_mass_factor: 1.1,
            heave_mass_factor: 1.5,
            roll_inertia_kg_m2: 0.003,
            pitch_inertia_kg_m2: 0.008,
            yaw_inertia_kg_m2: 0.008,
            thrust_max_n: 1.2,
            pitch_thrust_max_n: 0.25,
            thrust_arm_m: 0.05,
            pitch_arm_m: 0.12,
            roll_stiffness_nm_per_rad: 0.3,
            pitch_stiffness_nm_per_rad: 0.1,
            roll_damping_nms_per_rad: 0.02,
            pitch_damping_nms_per_rad: 0.02,
            yaw_damping_nms_per_rad: 0.04,
        }
    }
}

impl HydroParams {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.surge_drag_kg_per_m,
            self.heave_drag_kg_per_m,
            self.surge_mass_factor,
            self.heave_mass_factor,
            self.roll_inertia_kg_m2,
            self.pitch_inertia_kg_m2,
            self.yaw_inertia_kg_m2,
            self.thrust_max_n,
            self.pitch_thrust_max_n,
            self.thrust_arm_m,
            self.pitch_arm_m,
            self.roll_stiffness_nm_per_rad,
            self.pitch_stiffness_nm_per_rad,
            self.roll_damping_nms_per_rad,
            self.pitch_damping_nms_per_rad,
            self.yaw_damping_nms_per_rad,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err("hydro parameters must be finite and nonnegative".into());
        }
        if self.surge_mass_factor == 0.0
            || self.heave_mass_factor == 0.0
            || self.roll_inertia_kg_m2 == 0.0
            || self.pitch_inertia_kg_m2 == 0.0
            || self.yaw_inertia_kg_m2 == 0.0
        {
            return Err("mass factors and inertias must be positive".into());
        }
        if self.thrust_max_n <= self.pitch_thrust_max_n {
            return Err("thrust_max_n must exceed pitch_thrust_max_n".into());
        }
        Ok(())
    }
}

/// Forces (N) and moments (N·m). Heave is positive down.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Wrench {
    pub surge: f64,
    pub sway: f64,
    pub heave: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Wrench {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.surge, self.sway, self.heave, self.roll, self.pitch, self.yaw,
        ]
    }
}

/// Net wrench on the pod. `buoy_force` is the upward net hydrostatic force
/// (buoyancy minus weight).
pub fn net_wrench(
    state: &VehicleState,
    cmd: &ActuatorCommand,
    buoy_force: f64,
    params: &HydroParams,
) -> Wrench {
    let wrench = thrust_wrench(state, cmd, buoy_force, params);
    Wrench {
        surge: wrench.surge - params.surge_drag_kg_per_m * state.surge * state.surge.abs(),
        heave: wrench.heave - params.heave_drag_kg_per_m * state.heave * state.heave.abs(),
        roll: wrench.roll - params.roll_damping_nms_per_rad * state.roll_rate,
        pitch: wrench.pitch - params.pitch_damping_nms_per_rad * state.pitch_rate,
        yaw: wrench.yaw - params.yaw_damping_nms_per_rad * state.yaw_rate,
        sway: 0.0,
    }
}

/// Everything except the dissipative terms, which the integrator treats implicitly.
fn thrust_wrench(
    state: &VehicleState,
    cmd: &ActuatorCommand,
    buoy_force: f64,
    params: &HydroParams,
) -> Wrench {
    let left = cmd.left_duty * params.thrust_max_n;
    let right = cmd.right_duty * params.thrust_max_n;
    let total = left + right;
    let (sin_p, cos_p) = state.pitch.sin_cos();
    Wrench {
        surge: total * cos_p,
        sway: 0.0,
        // Nose-up thrust lifts the pod; positive heave is downward.
        heave: -buoy_force - total * sin_p,
        roll: -params.roll_stiffness_nm_per_rad * state.roll.sin(),
        pitch: cmd.pitch_duty * params.pitch_thrust_max_n * params.pitch_arm_m
            - params.pitch_stiffness_nm_per_rad * sin_p,
        yaw: (right - left) * params.thrust_arm_m,
    }
}

/// Integrates one fixed step with semi-implicit Euler: rates first, then pose.
/// Quadratic drag and rotational damping are applied implicitly so they can
/// only remove energy.
pub fn step(
    state: &VehicleState,
    cmd: &ActuatorCommand,
    buoy_force: f64,
    mass: f64,
    dt: f64,
    params: &HydroParams,
    bed_depth: Option<f64>,
) -> Result<VehicleState, HydroError> {
    if !(dt > 0.0 && dt <= 0.1) {
        return Err(HydroError::InvalidTimestep(dt));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(HydroError::NonPositiveMass(mass));
    }
    state.check_finite()?;

    let w = thrust_wrench(state, cmd, buoy_force, params);
    let m_surge = mass * params.surge_mass_factor;
    let m_heave = mass * params.heave_mass_factor;

    let mut next = *state;
    next.surge = (state.surge + dt * w.surge / m_surge)
        / (1.0 + dt * params.surge_drag_kg_per_m * state.surge.abs() / m_surge);
    next.heave = (state.heave + dt * w.heave / m_heave)
        / (1.0 + dt * params.heave_drag_kg_per_m * state.heave.abs() / m_heave);
    next.roll_rate = (state.roll_rate + dt * w.roll / params.roll_inertia_kg_m2)
        / (1.0 + dt * params.roll_damping_nms_per_rad / params.roll_inertia_kg_m2);
    next.pitch_rate = (state.pitch_rate + dt * w.pitch / params.pitch_inertia_kg_m2)
        / (1.0 + dt * params.pitch_damping_nms_per_rad / params.pitch_inertia_kg_m2);
    next.yaw_rate = (state.yaw_rate + dt * w.yaw / params.yaw_inertia_kg_m2)
        / (1.0 + dt * params.yaw_damping_nms_per_rad / params.yaw_inertia_kg_m2);

    let (sin_y, cos_y) = state.yaw.sin_cos();
    next.x += dt * next.surge * cos_y;
    next.y += dt * next.surge * sin_y;
    next.z += dt * next.heave;
    next.roll += dt * next.roll_rate;
    next.pitch += dt * next.pitch_rate;
    next.yaw += dt * next.yaw_rate;
    next.t = state.t + dt;

    if next.z <= 0.0 {
        next.z = 0.0;
        next.heave = next.heave.max(0.0);
    }
    if let Some(bed) = bed_depth {
        if next.z >= bed {
            next.z = bed;
            next.heave = next.heave.min(0.0);
        }
    }
    next.check_finite()?;
    Ok(next)
}

/// Attitude in degrees (roll, pitch, yaw), yaw wrapped to [-180, 180).
pub fn attitude_telemetry(state: &VehicleState) -> (f64, f64, f64) {
    let yaw = (state.yaw.to_degrees() + 180.0).rem_euclid(360.0) - 180.0;
    (state.roll.to_degrees(), state.pitch.to_degrees(), yaw)
}

/// Translational plus rotational kinetic energy with effective masses.
pub fn kinetic_energy(state: &VehicleState, mass: f64, params: &HydroParams) -> f64 {
    0.5 * mass * params.surge_mass_factor * state.surge * state.surge
        + 0.5 * mass * params.heave_mass_factor * state.heave * state.heave
        + 0.5 * params.roll_inertia_kg_m2 * state.roll_rate * state.roll_rate
        + 0.5 * params.pitch_inertia_kg_m2 * state.pitch_rate * state.pitch_rate
        + 0.5 * params.yaw_inertia_kg_m2 * state.yaw_rate * state.yaw_rate
}
