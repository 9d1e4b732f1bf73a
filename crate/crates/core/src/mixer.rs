//! Open-loop mixing of the six RC input channels into actuator commands, and
//! the electrical power model of the actuators.

use serde::{Deserialize, Serialize};

/// Three-state grasp input. The gripper has a pump and a separate vent valve,
/// so stored pressure can be held with both off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspInput {
    Close,
    #[default]
    Hold,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RcChannels {
    /// Forward thrust, [-1, 1]. The pumps cannot reverse, so negative values
    /// only matter in combination with yaw.
    pub thrust: f64,
    pub yaw: f64,
    pub pitch: f64,
    /// Buoyancy servo target, [0, 1].
    pub buoyancy: f64,
    pub winch: f64,
    pub grasp: GraspInput,
}

impl Default for RcChannels {
    fn default() -> Self {
        Self {
            thrust: 0.0,
            yaw: 0.0,
            pitch: 0.0,
            buoyancy: 0.0,
            winch: 0.0,
            grasp: GraspInput::Hold,
        }
    }
}

impl RcChannels {
    /// Failsafe channels: all motion inputs zero, gripper held, buoyancy kept where it was.
    pub fn neutral(buoyancy: f64) -> Self {
        Self {
            buoyancy,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub left_duty: f64,
    pub right_duty: f64,
    /// Positive runs the nose-up pump, negative the nose-down pump.
    pub pitch_duty: f64,
    pub servo_target: f64,
    pub gripper_pump_on: bool,
    pub gripper_valve_open: bool,
    /// Winch line rate, m/s, positive pays out.
    pub winch_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixerConfig {
    pub mix_gain: f64,
    pub winch_speed_max_m_per_s: f64,
}

impl Default for MixerConfig {
    fn default() -> Self {
        Self {
            mix_gain: 1.0,
            winch_speed_max_m_per_s: 0.25,
        }
    }
}

/// A channel that arrived out of range and was clamped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClampWarning {
    pub channel: &'static str,
    pub value: f64,
}

fn clamp_channel(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    warnings: &mut Vec<ClampWarning>,
) -> f64 {
    if value.is_nan() {
        warnings.push(ClampWarning {
            channel: name,
            value,
        });
        return 0.0_f64.clamp(lo, hi);
    }
    if value < lo || value > hi {
        warnings.push(ClampWarning {
            channel: name,
            value,
        });
    }
    value.clamp(lo, hi)
}

/// Mixes channels into a command. Out-of-range channels are clamped and reported.
pub fn mix(ch: &RcChannels, cfg: &MixerConfig) -> (ActuatorCommand, Vec<ClampWarning>) {
    let mut warnings = Vec::new();
    let thrust = clamp_channel("thrust", ch.thrust, -1.0, 1.0, &mut warnings);
    let yaw = clamp_channel("yaw", ch.yaw, -1.0, 1.0, &mut warnings);
    let pitch = clamp_channel("pitch", ch.pitch, -1.0, 1.0, &mut warnings);
    let buoyancy = clamp_channel("buoyancy", ch.buoyancy, 0.0, 1.0, &mut warnings);
    let winch = clamp_channel("winch", ch.winch, -1.0, 1.0, &mut warnings);

    let cmd = ActuatorCommand {
        left_duty: (thrust - yaw * cfg.mix_gain).clamp(0.0, 1.0),
        right_duty: (thrust + yaw * cfg.mix_gain).clamp(0.0, 1.0),
        pitch_duty: pitch,
        servo_target: buoyancy,
        gripper_pump_on: ch.grasp == GraspInput::Close,
        gripper_valve_open: ch.grasp == GraspInput::Open,
        winch_rate: winch * cfg.winch_speed_max_m_per_s,
    };
    (cmd, warnings)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    pub thrust_pump_max_w: f64,
    pub pitch_pump_max_w: f64,
    pub gripper_pump_max_w: f64,
    pub baseline_w: f64,
    /// Run both pitch pumps together (braking); doubles the pitch term.
    pub dual_pitch_pumps: bool,
    pub winch_w_per_m_per_s: f64,
    pub servo_slew_w: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            thrust_pump_max_w: 5.0,
            pitch_pump_max_w: 1.0,
            gripper_pump_max_w: 5.0,
            baseline_w: 0.5,
            dual_pitch_pumps: false,
            winch_w_per_m_per_s: 0.0,
            servo_slew_w: 0.0,
        }
    }
}

impl PowerModel {
    /// Sum of every actuator at full power, both pitch pumps included.
    pub fn actuator_ceiling(&self) -> f64 {
        2.0 * self.thrust_pump_max_w + 2.0 * self.pitch_pump_max_w + self.gripper_pump_max_w
    }
}

/// Actuator power excluding the avionics baseline.
pub fn actuator_power(cmd: &ActuatorCommand, model: &PowerModel) -> f64 {
    let pitch_pumps = if model.dual_pitch_pumps { 2.0 } else { 1.0 };
    let gripper = if cmd.gripper_pump_on {
        model.gripper_pump_max_w
    } else {
        0.0
    };
    model.thrust_pump_max_w * (cmd.left_duty + cmd.right_duty)
        + pitch_pumps * model.pitch_pump_max_w * cmd.pitch_duty.abs()
        + gripper
        + model.winch_w_per_m_per_s * cmd.winch_rate.abs()
}

/// Total electrical draw for a command.
pub fn power_draw(cmd: &ActuatorCommand, model: &PowerModel) -> f64 {
    model.baseline_w + actuator_power(cmd, model)
}
