//! Deterministic simulator of an aerially deployed underwater pod with a soft
//! gripper: morphing buoyancy, pump-driven 4-DOF locomotion, a fluidic
//! gripper, a winch tether, the mission phase machine, a scripted harness and a
//! live teleoperation service.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod buoyancy;
pub mod config;
pub mod gripper;
pub mod harness;
pub mod hydro;
pub mod mission;
pub mod mixer;
pub mod protocol;
pub mod server;
pub mod sim;
pub mod telemetry;
pub mod tether;

pub use config::Scenario;
pub use sim::{SimError, Simulation};
