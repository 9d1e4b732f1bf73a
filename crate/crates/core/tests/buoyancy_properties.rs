use podsim::buoyancy::{
    actuation_force, max_sustainable_depth, net_buoyancy_force, skin_retained_fraction,
    umbrella_volume, BuoyancyState, DepthLimit, SkinCompressionCurve, UmbrellaDesign,
    UmbrellaGeometry, Water, DEPTH_TOLERANCE,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DRY_MASS: f64 = 1.080;

fn default_geom() -> UmbrellaGeometry {
    UmbrellaDesign::default()
        .calibrate(DRY_MASS, &Water::default())
        .unwrap()
}

fn curve_strategy() -> impl Strategy<Value = SkinCompressionCurve> {
    prop::collection::vec((0.5..4.0f64, 0.0..0.06f64), 0..4).prop_map(|steps| {
        let mut pts = vec![(0.0, 1.0)];
        for (dd, drop) in steps {
            let &(d, f) = pts.last().unwrap();
            pts.push((d + dd, (f - drop).max(0.5)));
        }
        SkinCompressionCurve::new(pts).unwrap()
    })
}

fn design_strategy() -> impl Strategy<Value = UmbrellaDesign> {
    (0.03..0.09f64, 0.4..0.8f64, 0.0..1.0f64, 1.02..1.3f64).prop_map(
        |(pod_change, system_share, trim, arm_ratio)| UmbrellaDesign {
            pod_volume_change: pod_change,
            system_volume_change: pod_change * system_share,
            trim_servo_fraction: trim,
            arm_length_m: 0.085 * arm_ratio,
            ..UmbrellaDesign::default()
        },
    )
}

/// Upward force at full actuation, composed directly from volume and skin fraction.
fn full_actuation_force(d: f64, mass: f64, g: &UmbrellaGeometry, c: &SkinCompressionCurve) -> f64 {
    let w = Water::default();
    let v = umbrella_volume(1.0, g).unwrap() * skin_retained_fraction(d, c) + g.fixed_volume();
    w.density * w.gravity * v - mass * w.gravity
}

/// Deepest point of a 1 cm grid at which full actuation still lifts the pod.
fn scan_oracle(mass: f64, g: &UmbrellaGeometry, c: &SkinCompressionCurve) -> Option<f64> {
    let floor = c.last_depth();
    if full_actuation_force(floor, mass, g, c) >= 0.0 {
        return None;
    }
    let mut last = 0.0;
    let mut k = 0u32;
    loop {
        let d = f64::from(k) * 0.01;
        if d > floor {
            return Some(last);
        }
        if full_actuation_force(d, mass, g, c) >= 0.0 {
            last = d;
        } else {
            return Some(last);
        }
        k += 1;
    }
}

#[test]
fn volume_strictly_increasing_over_sampled_pairs() {
    let g = default_geom();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let a: f64 = rng.gen_range(0.0..1.0);
        let b: f64 = rng.gen_range(0.0..1.0);
        if a == b {
            continue;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        assert!(
            umbrella_volume(lo, &g).unwrap() < umbrella_volume(hi, &g).unwrap(),
            "V({lo}) >= V({hi})"
        );
    }
}

#[test]
fn incompressible_skin_is_unbounded_for_every_trimmable_mass() {
    let g = default_geom();
    let w = Water::default();
    let hi = w.density * (umbrella_volume(1.0, &g).unwrap() + g.fixed_volume());
    for k in 0..20 {
        let m = DRY_MASS + (hi - DRY_MASS) * f64::from(k) / 20.0;
        assert_eq!(
            max_sustainable_depth(m, &g, &SkinCompressionCurve::incompressible(), &w).unwrap(),
            DepthLimit::Unbounded
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn max_depth_agrees_with_scan(
        design in design_strategy(),
        curve in curve_strategy(),
        mass_share in 0.0..1.0f64,
    ) {
        let w = Water::default();
        let g = design.calibrate(DRY_MASS, &w).unwrap();
        let lo = w.density * (umbrella_volume(0.0, &g).unwrap() + g.fixed_volume());
        let hi = w.density * (umbrella_volume(1.0, &g).unwrap() + g.fixed_volume());
        let mass = lo + (hi - lo) * mass_share;
        let got = max_sustainable_depth(mass, &g, &curve, &w).unwrap();
        match (got, scan_oracle(mass, &g, &curve)) {
            (DepthLimit::Unbounded, None) => {}
            (DepthLimit::Finite(d), Some(s)) => {
                prop_assert!((d - s).abs() <= 0.01 + DEPTH_TOLERANCE, "bisection {} scan {}", d, s);
            }
            (a, b) => prop_assert!(false, "bisection {:?} scan {:?}", a, b),
        }
    }
}

proptest! {
    #[test]
    fn retained_fraction_nonincreasing_and_bounded(
        curve in curve_strategy(),
        a in 0.0..20.0f64,
        b in 0.0..20.0f64,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (f_lo, f_hi) = (skin_retained_fraction(lo, &curve), skin_retained_fraction(hi, &curve));
        prop_assert!(f_hi <= f_lo);
        for f in [f_lo, f_hi] {
            prop_assert!(f > 0.0 && f <= 1.0);
        }
    }

    #[test]
    fn net_force_increasing_in_servo(d in 0.0..10.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        prop_assume!((a - b).abs() > 1e-9);
        let g = default_geom();
        let c = SkinCompressionCurve::default();
        let w = Water::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let f = |u: f64| net_buoyancy_force(&BuoyancyState::new(u, d, &g, &c).unwrap(), DRY_MASS, &w).unwrap();
        prop_assert!(f(lo) < f(hi));
    }

    #[test]
    fn net_force_nonincreasing_in_depth(u in 0.0..1.0f64, a in 0.0..10.0f64, b in 0.0..10.0f64) {
        let g = default_geom();
        let c = SkinCompressionCurve::default();
        let w = Water::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let f = |d: f64| net_buoyancy_force(&BuoyancyState::new(u, d, &g, &c).unwrap(), DRY_MASS, &w).unwrap();
        prop_assert!(f(hi) <= f(lo));
    }

    #[test]
    fn actuation_force_homogeneous_in_depth(u in 0.0..1.0f64, d in 0.01..10.0f64, k in 0.0..5.0f64) {
        let g = default_geom();
        let w = Water::default();
        let base = actuation_force(u, d, &g, &w).unwrap();
        let scaled = actuation_force(u, k * d, &g, &w).unwrap();
        prop_assert!((scaled - k * base).abs() <= 1e-12 * base.abs().max(1.0));
    }
}
