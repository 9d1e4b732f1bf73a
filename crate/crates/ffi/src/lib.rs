//! C ABI over the podsim simulation loop.
//!
//! Every function returns a [`PodsimStatus`]; on anything other than
//! `PODSIM_STATUS_OK` a description is available from
//! [`podsim_last_error_message`] on the same thread. Handles are opaque and
//! must be released with [`podsim_sim_free`].

use podsim::buoyancy::{self, DepthLimit, SkinCompressionCurve, UmbrellaDesign, Water};
use podsim::config::Scenario;
use podsim::mission::{MassBudget, MassBudgetConfig, MissionEvent, MissionPhase};
use podsim::mixer::{GraspInput, RcChannels};
use podsim::{SimError, Simulation};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PodsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    SimFault = 4,
    Panic = 5,
    InvalidArgument = 6,
}

/// Values of [`PodsimChannels::grasp`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PodsimGrasp {
    Open = -1,
    Hold = 0,
    Close = 1,
}

/// Mission events accepted by [`podsim_sim_fire_event`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PodsimEvent {
    Takeoff = 0,
    Abort = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PodsimChannels {
    pub thrust: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub buoyancy: f64,
    pub winch: f64,
    /// One of the `PodsimGrasp` values.
    pub grasp: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PodsimTelemetry {
    pub t_s: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub depth_m: f64,
    pub roll_deg: f64,
    pub pitch_deg: f64,
    pub yaw_deg: f64,
    pub servo_u: f64,
    pub effective_volume_m3: f64,
    pub power_w: f64,
    pub closure: f64,
    pub tether_length_m: f64,
    /// Mission phase code; see [`podsim_phase_name`].
    pub phase: u32,
}

/// Opaque simulation handle.
pub struct PodsimSim {
    sim: Simulation,
    pending: Vec<MissionEvent>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn guard(f: impl FnOnce() -> Result<(), (PodsimStatus, String)>) -> PodsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PodsimStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside podsim");
            PodsimStatus::Panic
        }
    }
}

fn sim_error(e: SimError) -> (PodsimStatus, String) {
    let status = if e.exit_code() == 2 {
        PodsimStatus::Config
    } else {
        PodsimStatus::SimFault
    };
    (status, e.to_string())
}

fn null(what: &str) -> (PodsimStatus, String) {
    (PodsimStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next podsim call on the same thread.
#[no_mangle]
pub extern "C" fn podsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn podsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Static name of a phase code, or NULL for an unknown code.
#[no_mangle]
pub extern "C" fn podsim_phase_name(code: u32) -> *const c_char {
    const NAMES: [&str; 15] = [
        "GroundIdle\0",
        "TakeoffFlight\0",
        "TransitFlight\0",
        "WaterLanding\0",
        "DroneOff\0",
        "WinchDeploy\0",
        "UnderwaterTransit\0",
        "Approach\0",
        "Grasping\0",
        "ReturnTransit\0",
        "WinchRetract\0",
        "WaterTakeoff\0",
        "ReturnFlight\0",
        "Complete\0",
        "Aborted\0",
    ];
    NAMES
        .get(code as usize)
        .map_or(std::ptr::null(), |n| n.as_ptr().cast())
}

/// Creates a simulation from a scenario JSON document.
///
/// # Safety
/// `scenario_json` must be a valid NUL-terminated string and `out` a valid
/// pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn podsim_sim_new(
    scenario_json: *const c_char,
    out: *mut *mut PodsimSim,
) -> PodsimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if scenario_json.is_null() {
            return Err(null("scenario_json"));
        }
        // SAFETY: non-null and NUL-terminated per the contract above.
        let text = unsafe { CStr::from_ptr(scenario_json) }
            .to_str()
            .map_err(|e| (PodsimStatus::InvalidUtf8, e.to_string()))?;
        let scenario =
            Scenario::from_json(text).map_err(|e| (PodsimStatus::Config, e.to_string()))?;
        let sim = Simulation::new(scenario).map_err(sim_error)?;
        let handle = Box::new(PodsimSim {
            sim,
            pending: Vec::new(),
        });
        // SAFETY: `out` is non-null and writable per the contract above.
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `sim` must be NULL or a handle from [`podsim_sim_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn podsim_sim_free(sim: *mut PodsimSim) {
    if !sim.is_null() {
        // SAFETY: the handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(sim) });
    }
}

unsafe fn handle<'a>(sim: *mut PodsimSim) -> Result<&'a mut PodsimSim, (PodsimStatus, String)> {
    // SAFETY: callers pass a live handle or NULL.
    unsafe { sim.as_mut() }.ok_or_else(|| null("sim"))
}

/// Sets the six input channels used from the next step on.
///
/// # Safety
/// `sim` must be a live handle and `channels` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn podsim_sim_set_channels(
    sim: *mut PodsimSim,
    channels: *const PodsimChannels,
) -> PodsimStatus {
    guard(|| {
        let h = unsafe { handle(sim) }?;
        // SAFETY: checked for null; valid per the contract above.
        let ch = unsafe { channels.as_ref() }.ok_or_else(|| null("channels"))?;
        let grasp = match ch.grasp {
            -1 => GraspInput::Open,
            0 => GraspInput::Hold,
            1 => GraspInput::Close,
            g => {
                return Err((
                    PodsimStatus::InvalidArgument,
                    format!("grasp must be -1, 0 or 1, got {g}"),
                ))
            }
        };
        h.sim.set_channels(RcChannels {
            thrust: ch.thrust,
            yaw: ch.yaw,
            pitch: ch.pitch,
            buoyancy: ch.buoyancy,
            winch: ch.winch,
            grasp,
        });
        Ok(())
    })
}

/// Queues a mission event for the next step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn podsim_sim_fire_event(sim: *mut PodsimSim, event: u32) -> PodsimStatus {
    guard(|| {
        let h = unsafe { handle(sim) }?;
        let e = match event {
            0 => MissionEvent::Takeoff,
            1 => MissionEvent::Abort,
            e => {
                return Err((
                    PodsimStatus::InvalidArgument,
                    format!("unknown event code {e}"),
                ))
            }
        };
        h.pending.push(e);
        Ok(())
    })
}

/// Advances `steps` fixed steps. Queued events fire on the first of them.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn podsim_sim_step(sim: *mut PodsimSim, steps: u64) -> PodsimStatus {
    guard(|| {
        let h = unsafe { handle(sim) }?;
        for _ in 0..steps {
            let events = std::mem::take(&mut h.pending);
            h.sim.step(&events).map_err(sim_error)?;
        }
        Ok(())
    })
}

/// Copies the current telemetry record into `out`.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn podsim_sim_telemetry(
    sim: *const PodsimSim,
    out: *mut PodsimTelemetry,
) -> PodsimStatus {
    guard(|| {
        // SAFETY: callers pass a live handle or NULL.
        let h = unsafe { sim.as_ref() }.ok_or_else(|| null("sim"))?;
        // SAFETY: checked for null; writable per the contract above.
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let r = h.sim.telemetry();
        *out = PodsimTelemetry {
            t_s: r.t,
            x_m: r.x,
            y_m: r.y,
            depth_m: r.depth,
            roll_deg: r.roll,
            pitch_deg: r.pitch,
            yaw_deg: r.yaw,
            servo_u: r.servo_u,
            effective_volume_m3: r.effective_volume,
            power_w: r.power,
            closure: r.closure,
            tether_length_m: r.tether_length,
            phase: r.phase.code(),
        };
        Ok(())
    })
}

/// Restores the scenario's initial conditions and drops queued events.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn podsim_sim_reset(sim: *mut PodsimSim) -> PodsimStatus {
    guard(|| {
        let h = unsafe { handle(sim) }?;
        h.pending.clear();
        h.sim.reset().map_err(sim_error)
    })
}

/// Maximum depth the default pod can return from when carrying `total_mass_kg`.
/// Writes `INFINITY` when the skin does not limit the depth.
///
/// # Safety
/// `out_depth_m` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn podsim_max_sustainable_depth(
    total_mass_kg: f64,
    out_depth_m: *mut f64,
) -> PodsimStatus {
    guard(|| {
        // SAFETY: checked for null; writable per the contract above.
        let out = unsafe { out_depth_m.as_mut() }.ok_or_else(|| null("out_depth_m"))?;
        let water = Water::default();
        let dry = MassBudget::from_config(&MassBudgetConfig::default())
            .map_err(|e| (PodsimStatus::Config, e.to_string()))?
            .dry_total();
        let geom = UmbrellaDesign::default()
            .calibrate(dry, &water)
            .map_err(|e| (PodsimStatus::Config, e.to_string()))?;
        let limit = buoyancy::max_sustainable_depth(
            total_mass_kg,
            &geom,
            &SkinCompressionCurve::default(),
            &water,
        )
        .map_err(|e| (PodsimStatus::InvalidArgument, e.to_string()))?;
        *out = match limit {
            DepthLimit::Finite(d) => d,
            DepthLimit::Unbounded => f64::INFINITY,
        };
        Ok(())
    })
}

// Keeps phase codes and names in lockstep with the core enum.
const _: () = assert!(MissionPhase::Aborted as u32 == 14);
