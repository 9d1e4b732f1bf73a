use podsim::config::Scenario;
use podsim::harness;
use podsim::mission::{GraspSummary, MissionEvent, MissionPhase};
use podsim::mixer::RcChannels;
use podsim::tether::LENGTH_TOLERANCE;
use podsim::Simulation;

fn scenario(name: &str) -> Scenario {
    let path = format!("{}/scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"));
    Scenario::load(path.as_ref()).unwrap()
}

/// Steps a scenario by hand, firing its timeline and events, and calls `check`
/// after every step.
fn drive(s: &Scenario, mut check: impl FnMut(&Simulation)) -> Simulation {
    let mut sim = Simulation::new(s.clone()).unwrap();
    let mut events = s.events.clone();
    events.sort_by(|a, b| a.t_s.total_cmp(&b.t_s));
    let mut next = 0;
    for _ in 0..s.total_steps() {
        let t = sim.time();
        if let Some(ch) = s.channels_at(t) {
            sim.set_channels(*ch);
        }
        let mut fired = Vec::new();
        while next < events.len() && events[next].t_s <= t + 1e-9 {
            fired.push(events[next].kind);
            next += 1;
        }
        sim.step(&fired).unwrap();
        check(&sim);
    }
    sim
}

#[test]
fn lake_mission_visits_every_phase_in_order() {
    let out = harness::run(&scenario("lake_mission"), false).unwrap();
    let visited: Vec<_> = out.report.mission.phases.iter().map(|p| p.phase).collect();
    assert_eq!(visited, MissionPhase::SEQUENCE.to_vec());
    assert_eq!(out.report.mission.final_phase, MissionPhase::Complete);
    assert_eq!(out.report.mission.grasp_outcome, GraspSummary::Held);
    assert!(out.report.mission.abort_reason.is_none());
}

#[test]
fn tether_and_mass_invariants_hold_every_step() {
    let s = scenario("lake_mission");
    let dry = Simulation::new(s.clone()).unwrap().budget().dry_total();
    let mut steps_in_water = 0;
    let mut held_steps = 0;
    drive(&s, |sim| {
        let st = sim.state();
        if !st.airborne {
            steps_in_water += 1;
            let d = st.tether.distance_to(st.vehicle.position());
            assert!(
                d <= st.tether.deployed_length + LENGTH_TOLERANCE,
                "t={} distance {d} > {}",
                sim.time(),
                st.tether.deployed_length
            );
        }
        let b = sim.budget();
        let held = st
            .gripper
            .held_object
            .map_or(0.0, |i| sim.scenario().objects[i].dry_mass);
        if held > 0.0 {
            held_steps += 1;
        }
        let sum = b.pod_structure
            + b.skin
            + b.gripper
            + b.camera_case
            + b.electronics
            + b.retained_water
            + b.held_object;
        assert_eq!(b.submerged_total(), sum);
        assert!((b.dry_total() - dry).abs() < 1e-15);
        assert_eq!(b.retained_water, st.gripper.water_mass);
        assert_eq!(b.held_object, held);
    });
    assert!(steps_in_water > 1000);
    assert!(held_steps > 100);
}

#[test]
fn successful_runs_follow_the_declared_order() {
    for name in ["lake_mission", "grasp_maneuver"] {
        let mut s = scenario(name);
        // Long enough for the two-second hold after the fingers reach grip closure.
        s.duration_s = s.duration_s.max(20.0);
        let sim = drive(&s, |_| {});
        for tr in &sim.mission().transitions {
            let expected = tr.from.next().unwrap();
            let ends_early = sim.mission().final_phase == Some(tr.from);
            assert!(
                tr.to == expected || (ends_early && tr.to == MissionPhase::Complete),
                "{name}: {} -> {}",
                tr.from,
                tr.to
            );
        }
        assert_eq!(sim.mission().phase, MissionPhase::Complete, "{name}");
        assert!(sim.state().gripper.held_object.is_some(), "{name}");
    }
}

#[test]
fn abort_mid_mission_is_terminal() {
    let s = scenario("lake_mission");
    let mut sim = Simulation::new(s).unwrap();
    sim.step(&[MissionEvent::Takeoff]).unwrap();
    for _ in 0..300 {
        sim.step(&[]).unwrap();
    }
    sim.step(&[MissionEvent::Abort]).unwrap();
    assert_eq!(sim.mission().phase, MissionPhase::Aborted);
    for _ in 0..100 {
        sim.step(&[MissionEvent::Takeoff]).unwrap();
    }
    assert_eq!(sim.mission().phase, MissionPhase::Aborted);
}

fn endpoint(step_s: f64) -> [f64; 3] {
    let mut s = scenario("neutral_drift");
    s.step_s = step_s;
    s.duration_s = 30.0;
    let mut sim = Simulation::new(s.clone()).unwrap();
    sim.set_channels(RcChannels {
        thrust: 0.6,
        yaw: 0.3,
        pitch: -0.2,
        buoyancy: sim.channels().buoyancy,
        ..Default::default()
    });
    for _ in 0..s.total_steps() {
        sim.step(&[]).unwrap();
    }
    sim.state().vehicle.position()
}

#[test]
fn halving_the_step_moves_the_endpoint_less_than_one_percent() {
    let coarse = endpoint(0.01);
    let fine = endpoint(0.005);
    let diff: f64 = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = fine.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm > 0.5, "pod barely moved: {fine:?}");
    assert!(diff / norm < 0.01, "relative change {}", diff / norm);
}

#[test]
fn grasp_maneuver_attitude_stays_bounded() {
    let out = harness::run(&scenario("grasp_maneuver"), false).unwrap();
    let peak_pitch = out.records.iter().map(|r| r.pitch.abs()).fold(0.0, f64::max);
    let peak_roll = out.records.iter().map(|r| r.roll.abs()).fold(0.0, f64::max);
    assert!(peak_pitch < 30.0, "pitch excursion {peak_pitch} deg");
    assert!(peak_roll < 5.0, "roll excursion {peak_roll} deg");
    let settled = out.records.last().unwrap();
    assert!(settled.pitch.abs() < 1.0, "final pitch {}", settled.pitch);
}
