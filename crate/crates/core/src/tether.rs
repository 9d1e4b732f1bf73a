//! Straight, inextensible tether between the floating drone and the pod.

use crate::hydro::VehicleState;
use serde::{Deserialize, Serialize};

/// Allowed overshoot of the line length.
pub const LENGTH_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TetherConfig {
    pub max_length_m: f64,
    /// The line counts as taut within this distance of its deployed length.
    pub slack_eps_m: f64,
}

impl Default for TetherConfig {
    fn default() -> Self {
        Self {
            max_length_m: 8.0,
            slack_eps_m: 0.005,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TetherState {
    pub deployed_length: f64,
    /// Surface anchor (drone) position in the horizontal plane.
    pub anchor: [f64; 2],
    pub taut: bool,
}

impl TetherState {
    pub fn new(deployed_length: f64, anchor: [f64; 2]) -> Self {
        Self {
            deployed_length,
            anchor,
            taut: false,
        }
    }

    fn anchor3(&self) -> [f64; 3] {
        [self.anchor[0], self.anchor[1], 0.0]
    }

    pub fn distance_to(&self, pos: [f64; 3]) -> f64 {
        norm(sub(pos, self.anchor3()))
    }

    pub fn is_taut_at(&self, pos: [f64; 3], cfg: &TetherConfig) -> bool {
        self.distance_to(pos) >= self.deployed_length - cfg.slack_eps_m
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub fn winch_step(ts: &TetherState, winch_rate: f64, dt: f64, cfg: &TetherConfig) -> TetherState {
    TetherState {
        deployed_length: (ts.deployed_length + winch_rate * dt).clamp(0.0, cfg.max_length_m),
        ..*ts
    }
}

/// Force the taut line applies to cancel the outward component of
/// `net_outward_force` (world frame). Zero when slack.
pub fn constraint_force(
    ts: &TetherState,
    pod_position: [f64; 3],
    net_force: [f64; 3],
    cfg: &TetherConfig,
) -> [f64; 3] {
    let rel = sub(pod_position, ts.anchor3());
    let dist = norm(rel);
    if dist == 0.0 || !ts.is_taut_at(pod_position, cfg) {
        return [0.0; 3];
    }
    let e = [rel[0] / dist, rel[1] / dist, rel[2] / dist];
    let outward = dot(net_force, e);
    if outward <= 0.0 {
        return [0.0; 3];
    }
    [-outward * e[0], -outward * e[1], -outward * e[2]]
}

/// Projects the pod back inside the line length and removes any velocity
/// component that would lengthen it faster than the winch pays out.
///
/// `length_rate` is the winch rate applied during the step. Returns the
/// projected state and updates the tether's `taut` flag.
pub fn enforce(
    ts: &mut TetherState,
    state: &VehicleState,
    length_rate: f64,
    cfg: &TetherConfig,
) -> VehicleState {
    let mut s = *state;
    let rel = sub(s.position(), ts.anchor3());
    let dist = norm(rel);
    ts.taut = dist >= ts.deployed_length - cfg.slack_eps_m;
    if !ts.taut || dist == 0.0 {
        return s;
    }
    let e = [rel[0] / dist, rel[1] / dist, rel[2] / dist];
    if dist > ts.deployed_length {
        let l = ts.deployed_length;
        s.x = ts.anchor[0] + e[0] * l;
        s.y = ts.anchor[1] + e[1] * l;
        s.z = (e[2] * l).max(0.0);
    }

    // Velocity in the (surge, heave) subspace the model can represent.
    let heading = [s.yaw.cos(), s.yaw.sin(), 0.0];
    let g = [dot(heading, e), e[2]];
    let radial = s.surge * g[0] + s.heave * g[1];
    let excess = radial - length_rate;
    let gg = g[0] * g[0] + g[1] * g[1];
    if excess > 0.0 && gg > 1e-12 {
        s.surge -= excess * g[0] / gg;
        s.heave -= excess * g[1] / gg;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> TetherConfig {
        TetherConfig::default()
    }

    #[test]
    fn pay_out_integrates() {
        let mut t = TetherState::default();
        for _ in 0..500 {
            t = winch_step(&t, 0.2, 0.01, &cfg());
        }
        assert!((t.deployed_length - 1.0).abs() < 1e-9);
    }

    #[test]
    fn retract_clamps_at_zero() {
        let t = winch_step(&TetherState::new(0.3, [0.0; 2]), -1.0, 1.0, &cfg());
        assert_eq!(t.deployed_length, 0.0);
    }

    #[test]
    fn deploy_retract_cycle_is_symmetric() {
        let mut t = TetherState::new(0.0, [0.0; 2]);
        for _ in 0..64 {
            t = winch_step(&t, 0.25, 0.5, &cfg());
        }
        assert_eq!(t.deployed_length, 8.0);
        for _ in 0..64 {
            t = winch_step(&t, -0.25, 0.5, &cfg());
        }
        assert_eq!(t.deployed_length, 0.0);
    }

    #[test]
    fn slack_line_exerts_nothing() {
        let t = TetherState::new(5.0, [0.0; 2]);
        assert_eq!(
            constraint_force(&t, [1.0, 0.0, 1.0], [3.0, 0.0, 3.0], &cfg()),
            [0.0; 3]
        );
    }

    #[test]
    fn taut_line_cancels_outward_force() {
        let t = TetherState::new(2.0, [0.0; 2]);
        let f = constraint_force(&t, [0.0, 0.0, 2.0], [1.0, 0.0, 3.0], &cfg());
        assert_eq!(f, [0.0, 0.0, -3.0]);
        let f = constraint_force(&t, [0.0, 0.0, 2.0], [1.0, 0.0, -3.0], &cfg());
        assert_eq!(f, [0.0; 3]);
    }

    #[test]
    fn outward_velocity_projected_at_full_extension() {
        let mut t = TetherState::new(2.0, [0.0; 2]);
        let s = VehicleState {
            z: 2.0,
            heave: 0.3,
            ..Default::default()
        };
        let p = enforce(&mut t, &s, 0.0, &cfg());
        assert!(t.taut);
        assert_eq!(p.heave, 0.0);

        // Horizontal extension with forward surge.
        let mut t = TetherState::new(2.0, [0.0; 2]);
        let s = VehicleState {
            x: 2.0,
            surge: 0.5,
            ..Default::default()
        };
        let p = enforce(&mut t, &s, 0.0, &cfg());
        assert!(p.surge.abs() < 1e-12);
    }

    #[test]
    fn retracting_line_draws_pod_in_at_winch_rate() {
        let mut t = TetherState::new(3.0, [0.0; 2]);
        let mut s = VehicleState {
            z: 3.0,
            ..Default::default()
        };
        let dt = 0.01;
        for _ in 0..100 {
            t = winch_step(&t, -0.2, dt, &cfg());
            s = enforce(&mut t, &s, -0.2, &cfg());
        }
        assert!((s.z - 2.8).abs() < 1e-9);
        assert!((s.heave + 0.2).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn never_beyond_length(
            x in -5.0..5.0f64, y in -5.0..5.0f64, z in 0.0..5.0f64,
            len in 0.0..4.0f64, yaw in -3.0..3.0f64, surge in -1.0..1.0f64, heave in -1.0..1.0f64,
        ) {
            let mut t = TetherState::new(len, [0.5, -0.5]);
            let s = VehicleState { x, y, z, yaw, surge, heave, ..Default::default() };
            let p = enforce(&mut t, &s, 0.0, &cfg());
            prop_assert!(t.distance_to(p.position()) <= len + LENGTH_TOLERANCE);
            prop_assert!(p.z >= 0.0);
        }
    }
}
