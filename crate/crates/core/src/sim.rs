//! The simulation loop: one owner of all mutable state, advanced in fixed steps.

use crate::buoyancy::{
    self, BuoyancyError, BuoyancyState, SkinCompressionCurve, UmbrellaGeometry, Water,
};
use crate::config::{ConfigError, Scenario, ServoInit, ServoPreset};
use crate::gripper::{
    self, GraspOutcome, GripperConfig, GripperError, GripperState, RetentionTable,
};
use crate::hydro::{self, HydroError, HydroParams, VehicleState};
use crate::mission::{
    payload_check, DroneModel, DroneState, FlightPlan, GuardConfig, GuardInputs, MassBudget,
    Mission, MissionEvent, MissionPhase, PhaseTransition,
};
use crate::mixer::{self, ActuatorCommand, ClampWarning, MixerConfig, PowerModel, RcChannels};
use crate::telemetry::TelemetryRecord;
use crate::tether::{self, TetherConfig, TetherState};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("simulation fault: {0}")]
    Hydro(#[from] HydroError),
    #[error("simulation fault: {0}")]
    Buoyancy(#[from] BuoyancyError),
    #[error("simulation fault: {0}")]
    Gripper(#[from] GripperError),
}

impl SimError {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for faults.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Setup(_) => 2,
            _ => 3,
        }
    }
}

/// Everything derived from a scenario that stays fixed during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Model {
    pub dt: f64,
    pub water: Water,
    pub bed_depth: Option<f64>,
    pub geom: UmbrellaGeometry,
    pub curve: SkinCompressionCurve,
    pub hydro: HydroParams,
    pub gripper: GripperConfig,
    pub retention: RetentionTable,
    pub mixer: MixerConfig,
    pub power: PowerModel,
    pub tether: TetherConfig,
    pub budget: MassBudget,
    pub drone: DroneModel,
    pub guards: GuardConfig,
    pub flight: FlightPlan,
    pub servo_rate: f64,
}

impl Model {
    pub fn from_scenario(s: &Scenario) -> Result<Self, SimError> {
        let budget = MassBudget::from_config(&s.pod.mass)
            .map_err(|e| SimError::Setup(format!("pod.mass: {e}")))?;
        let water = s.environment.water;
        let geom = s
            .pod
            .umbrella
            .calibrate(budget.dry_total(), &water)
            .map_err(|e| SimError::Setup(format!("pod.umbrella: {e}")))?;
        Ok(Self {
            dt: s.step_s,
            water,
            bed_depth: s.environment.bed_depth_m,
            geom,
            curve: s.pod.skin_curve.clone(),
            hydro: s.pod.hydro,
            gripper: s.pod.gripper,
            retention: s.pod.retention,
            mixer: s.pod.mixer,
            power: s.pod.power,
            tether: s.pod.tether,
            budget,
            drone: s.mission.drone.into(),
            guards: s.mission.guards.clone(),
            flight: s.mission.flight.clone(),
            servo_rate: s.pod.servo_rate_per_s,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimState {
    pub step: u64,
    pub vehicle: VehicleState,
    pub servo: f64,
    pub gripper: GripperState,
    pub tether: TetherState,
    pub drone: DroneState,
    /// The pod hangs from the drone out of the water.
    pub airborne: bool,
    pub object_positions: Vec<[f64; 3]>,
    pub held_for: f64,
    pub ever_held: bool,
    pub command: ActuatorCommand,
    pub power: f64,
    pub effective_volume: f64,
}

/// Things that happened during one step.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StepReport {
    pub transition: Option<PhaseTransition>,
    pub warnings: Vec<ClampWarning>,
    pub grasped: Option<usize>,
    pub released: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    model: Model,
    state: SimState,
    mission: Mission,
    channels: RcChannels,
    max_tether_excess: f64,
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        scenario.validate()?;
        let model = Model::from_scenario(&scenario)?;
        let init = &scenario.initial;
        let start = scenario.mission.start_phase;
        let airborne = !start.pod_in_water();

        // In-water starts put the floating drone directly above the pod.
        let drone_pos = match start {
            MissionPhase::GroundIdle | MissionPhase::TakeoffFlight => model.flight.home_m,
            p if p.pod_in_water() => [init.position_m[0], init.position_m[1]],
            _ => model.flight.landing_site_m,
        };
        let drone = DroneState {
            position: drone_pos,
            altitude: match start {
                MissionPhase::TransitFlight
                | MissionPhase::ReturnFlight
                | MissionPhase::WaterLanding => model.flight.cruise_altitude_m,
                _ => 0.0,
            },
        };
        let vehicle = if airborne {
            VehicleState::at(drone_pos[0], drone_pos[1], 0.0, init.yaw_deg.to_radians())
        } else {
            let p = init.position_m;
            VehicleState::at(p[0], p[1], p[2], init.yaw_deg.to_radians())
        };
        let gripper = GripperState::with_closure(init.closure, &model.gripper);

        let mut budget = model.budget;
        budget.retained_water = gripper.water_mass;
        let extra = gripper.water_mass / model.water.density;
        let servo = match init.servo {
            ServoInit::Fraction(u) => u,
            ServoInit::Named(ServoPreset::Neutral) => buoyancy::neutral_servo_fraction(
                vehicle.z,
                budget.submerged_total(),
                extra,
                &model.geom,
                &model.curve,
                &model.water,
            )
            .map_err(|e| SimError::Setup(format!("initial.servo: {e}")))?
            .ok_or_else(|| {
                SimError::Setup(format!(
                    "initial.servo: no neutral trim exists at {} m depth",
                    vehicle.z
                ))
            })?,
        };

        let channels = RcChannels::neutral(servo);
        let (command, _) = mixer::mix(&channels, &model.mixer);
        let power = mixer::power_draw(&command, &model.power);
        let effective_volume =
            BuoyancyState::new(servo, vehicle.z, &model.geom, &model.curve)?.effective_volume;

        let state = SimState {
            step: 0,
            vehicle,
            servo,
            gripper,
            tether: TetherState::new(init.tether_length_m, drone_pos),
            drone,
            airborne,
            object_positions: scenario.objects.iter().map(|o| o.position).collect(),
            held_for: 0.0,
            ever_held: false,
            command,
            power,
            effective_volume,
        };
        let mission = Mission::new(start, scenario.mission.final_phase, 0.0);
        Ok(Self {
            scenario,
            model,
            state,
            mission,
            channels,
            max_tether_excess: 0.0,
        })
    }

    /// Restores the scenario's initial conditions.
    pub fn reset(&mut self) -> Result<(), SimError> {
        *self = Simulation::new(self.scenario.clone())?;
        Ok(())
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn mission(&self) -> &Mission {
        &self.mission
    }

    pub fn channels(&self) -> &RcChannels {
        &self.channels
    }

    pub fn set_channels(&mut self, ch: RcChannels) {
        self.channels = ch;
    }

    pub fn time(&self) -> f64 {
        self.state.step as f64 * self.model.dt
    }

    /// Largest amount by which the pod has exceeded the deployed line length.
    pub fn max_tether_excess(&self) -> f64 {
        self.max_tether_excess
    }

    /// Mass budget including the current water load and held object.
    pub fn budget(&self) -> MassBudget {
        let mut b = self.model.budget;
        b.retained_water = self.state.gripper.water_mass;
        b.held_object = self
            .state
            .gripper
            .held_object
            .map_or(0.0, |i| self.scenario.objects[i].dry_mass);
        b
    }

    fn extra_volume(&self) -> f64 {
        let water = self.state.gripper.water_mass / self.model.water.density;
        let object = self
            .state
            .gripper
            .held_object
            .map_or(0.0, |i| self.scenario.objects[i].displaced_volume);
        water + object
    }

    /// Load trying to pull object `i` out of the fingers.
    fn object_pull(&self, i: usize) -> f64 {
        let obj = &self.scenario.objects[i];
        if self.state.airborne {
            obj.dry_mass * self.model.water.gravity
        } else {
            obj.submerged_weight(self.model.water.density, self.model.water.gravity)
                .abs()
        }
    }

    pub fn telemetry(&self) -> TelemetryRecord {
        let (roll, pitch, yaw) = hydro::attitude_telemetry(&self.state.vehicle);
        TelemetryRecord {
            t: self.time(),
            x: self.state.vehicle.x,
            y: self.state.vehicle.y,
            depth: self.state.vehicle.z,
            roll,
            pitch,
            yaw,
            servo_u: self.state.servo,
            effective_volume: self.state.effective_volume,
            power: self.state.power,
            closure: self.state.gripper.closure,
            tether_length: self.state.tether.deployed_length,
            phase: self.mission.phase,
        }
    }

    /// Advances one fixed step with the current channels and the given mission events.
    pub fn step(&mut self, events: &[MissionEvent]) -> Result<StepReport, SimError> {
        let dt = self.model.dt;
        let mut report = StepReport::default();
        let (cmd, warnings) = mixer::mix(&self.channels, &self.model.mixer);
        report.warnings = warnings;

        let max_slew = self.model.servo_rate * dt;
        let slew = (cmd.servo_target - self.state.servo).clamp(-max_slew, max_slew);
        self.state.servo = (self.state.servo + slew).clamp(0.0, 1.0);

        let before = self.state.gripper.held_object;
        self.state.gripper = gripper::actuate(
            &self.state.gripper,
            cmd.gripper_pump_on,
            cmd.gripper_valve_open,
            dt,
            &self.model.gripper,
        )?;

        let t_next = (self.state.step + 1) as f64 * dt;
        if self.state.airborne {
            let phase = self.mission.phase;
            self.state.drone = self.model.flight.fly(&self.state.drone, phase, dt);
            let p = self.state.drone.position;
            self.state.vehicle = VehicleState {
                t: t_next,
                ..VehicleState::at(p[0], p[1], 0.0, self.state.vehicle.yaw)
            };
            self.state.tether.anchor = p;
        } else {
            let old_len = self.state.tether.deployed_length;
            self.state.tether =
                tether::winch_step(&self.state.tether, cmd.winch_rate, dt, &self.model.tether);
            let line_rate = (self.state.tether.deployed_length - old_len) / dt;
            let bs = BuoyancyState::new(
                self.state.servo,
                self.state.vehicle.z.max(0.0),
                &self.model.geom,
                &self.model.curve,
            )?;
            let budget = self.budget();
            let force = buoyancy::net_buoyancy_force_with(
                &bs,
                budget.submerged_total(),
                self.extra_volume(),
                &self.model.water,
            )?;
            let next = hydro::step(
                &self.state.vehicle,
                &cmd,
                force,
                budget.submerged_total(),
                dt,
                &self.model.hydro,
                self.model.bed_depth,
            )?;
            let mut next =
                tether::enforce(&mut self.state.tether, &next, line_rate, &self.model.tether);
            next.t = t_next;
            self.state.vehicle = next;
            let excess =
                self.state.tether.distance_to(next.position()) - self.state.tether.deployed_length;
            self.max_tether_excess = self.max_tether_excess.max(excess);
        }

        self.update_grasp(&cmd, before, &mut report, dt);

        self.state.command = cmd;
        self.state.power = mixer::power_draw(&cmd, &self.model.power)
            + if slew != 0.0 {
                self.model.power.servo_slew_w
            } else {
                0.0
            };
        self.state.effective_volume = BuoyancyState::new(
            self.state.servo,
            self.state.vehicle.z,
            &self.model.geom,
            &self.model.curve,
        )?
        .effective_volume;
        self.state.step += 1;

        let inputs = self.guard_inputs(&cmd, t_next);
        if let Some(tr) = self.mission.update(
            t_next,
            &inputs,
            events,
            &self.model.guards,
            &self.model.flight,
        ) {
            self.enter_phase(tr.to);
            report.transition = Some(tr);
        }
        Ok(report)
    }

    fn update_grasp(
        &mut self,
        cmd: &ActuatorCommand,
        before: Option<usize>,
        report: &mut StepReport,
        dt: f64,
    ) {
        let pod = self.state.vehicle.position();
        if let Some(i) = self.state.gripper.held_object {
            let outcome = gripper::grasp_check(
                &self.state.gripper,
                &self.scenario.objects[i],
                self.object_pull(i),
                &self.model.retention,
                &self.model.gripper,
            );
            if outcome == GraspOutcome::Released {
                self.state.gripper.held_object = None;
            }
        } else if cmd.gripper_pump_on && !self.state.airborne {
            let candidate = self
                .state
                .object_positions
                .iter()
                .enumerate()
                .map(|(i, p)| (i, distance(*p, pod)))
                .filter(|&(_, d)| d <= self.model.guards.capture_radius_m)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((i, _)) = candidate {
                let outcome = gripper::grasp_check(
                    &self.state.gripper,
                    &self.scenario.objects[i],
                    self.object_pull(i),
                    &self.model.retention,
                    &self.model.gripper,
                );
                if outcome == GraspOutcome::Held {
                    self.state.gripper.held_object = Some(i);
                    self.state.ever_held = true;
                    report.grasped = Some(i);
                }
            }
        }
        match self.state.gripper.held_object {
            Some(i) => {
                self.state.object_positions[i] = pod;
                self.state.held_for += dt;
            }
            None => {
                self.state.held_for = 0.0;
                if before.is_some() {
                    report.released = before;
                }
            }
        }
    }

    fn guard_inputs(&self, cmd: &ActuatorCommand, t: f64) -> GuardInputs {
        let phase = self.mission.phase;
        let target = self.model.flight.target(phase);
        let drone = self.state.drone;
        let target_distance = self
            .state
            .object_positions
            .get(self.scenario.mission.target_object)
            .map(|p| distance(*p, self.state.vehicle.position()));
        GuardInputs {
            time_in_phase: self.mission.time_in_phase(t),
            depth: self.state.vehicle.z,
            drone_altitude: drone.altitude,
            drone_to_target: (target[0] - drone.position[0]).hypot(target[1] - drone.position[1]),
            winch_rate: cmd.winch_rate,
            tether_length: self.state.tether.deployed_length,
            target_distance,
            grasp_commanded: cmd.gripper_pump_on,
            held_for: self.state.held_for,
            payload_ok: payload_check(&self.budget(), &self.model.drone).is_ok(),
        }
    }

    fn enter_phase(&mut self, phase: MissionPhase) {
        match phase {
            MissionPhase::DroneOff => {
                self.state.airborne = false;
                let p = self.state.drone.position;
                self.state.tether.anchor = p;
                self.state.vehicle = VehicleState {
                    t: self.state.vehicle.t,
                    ..VehicleState::at(p[0], p[1], 0.0, self.state.vehicle.yaw)
                };
            }
            MissionPhase::WaterTakeoff => {
                self.state.airborne = true;
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(json: &str) -> Scenario {
        Scenario::from_json(json).unwrap()
    }

    #[test]
    fn neutral_start_holds_depth() {
        let s = scenario(
            r#"{"name": "n", "duration_s": 10, "mission": {"start_phase": "UnderwaterTransit"},
                "initial": {"position_m": [0, 0, 1.5], "tether_length_m": 5}}"#,
        );
        let mut sim = Simulation::new(s).unwrap();
        for _ in 0..1000 {
            sim.step(&[]).unwrap();
        }
        assert!((sim.state().vehicle.z - 1.5).abs() < 1e-7);
    }

    #[test]
    fn thrust_raises_power_by_ten_watts() {
        let s = scenario(
            r#"{"name": "n", "duration_s": 1, "mission": {"start_phase": "UnderwaterTransit"},
                "initial": {"position_m": [0, 0, 1], "tether_length_m": 5}}"#,
        );
        let mut sim = Simulation::new(s).unwrap();
        let idle = sim.telemetry().power;
        let mut ch = *sim.channels();
        ch.thrust = 1.0;
        sim.set_channels(ch);
        sim.step(&[]).unwrap();
        assert!((sim.telemetry().power - idle - 10.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_trim_is_a_setup_error() {
        let s = scenario(
            r#"{"name": "n", "duration_s": 1, "mission": {"start_phase": "UnderwaterTransit"},
                "initial": {"position_m": [0, 0, 30], "tether_length_m": 8}}"#,
        );
        let err = Simulation::new(s).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn reset_restores_initial_state() {
        let s = scenario(
            r#"{"name": "n", "duration_s": 1, "mission": {"start_phase": "UnderwaterTransit"},
                "initial": {"position_m": [0, 0, 1], "tether_length_m": 5}}"#,
        );
        let mut sim = Simulation::new(s).unwrap();
        let initial = sim.state().clone();
        sim.set_channels(RcChannels {
            thrust: 1.0,
            ..*sim.channels()
        });
        for _ in 0..50 {
            sim.step(&[]).unwrap();
        }
        assert_ne!(sim.state(), &initial);
        sim.reset().unwrap();
        assert_eq!(sim.state(), &initial);
    }
}
