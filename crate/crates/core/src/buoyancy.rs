//! Shape-morphing buoyancy of the pod.
//!
//! The pod skin is modelled as a lofted ruled surface. Each half of the pod
//! connects a rigid circular end ring (radius `base_radius`, at `±pod_half_length`
//! along the body axis) to the equatorial outline with straight rulings at equal
//! polar angle. At full actuation the equatorial outline is the regular hexagon
//! spanned by the six support-arm tips. Retracting the servo folds the skin
//! between neighbouring arms inward about a hinge at the mid-chord, turning the
//! hexagon into a twelve-pointed star.
//!
//! For a loft of this kind the cross-section at fraction `s` of the way from the
//! end ring has polar radius `(1 - s) * b + s * rho(theta)`, which gives the
//! exact volume
//!
//! ```text
//! V = (H / 3) * (2 pi b^2 + b * I1 + I2),   I1 = ∮ rho dθ,   I2 = ∮ rho² dθ
//! ```
//!
//! Both integrals have closed forms on each straight edge of the outline.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuoyancyError {
    #[error("servo fraction {0} outside [0, 1]")]
    ServoOutOfRange(f64),
    #[error("depth {0} m is negative or not finite")]
    InvalidDepth(f64),
    #[error("mass {0} kg must be positive")]
    NonPositiveMass(f64),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid skin compression curve: {0}")]
    Curve(String),
    #[error("no neutral trim reachable at the surface for {mass} kg (net force {retracted:.4} N retracted, {extended:.4} N extended)")]
    NoNeutralTrim {
        mass: f64,
        retracted: f64,
        extended: f64,
    },
}

pub type Result<T> = std::result::Result<T, BuoyancyError>;

/// Fluid properties used by every hydrostatic computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Water {
    #[serde(rename = "density_kg_per_m3")]
    pub density: f64,
    #[serde(rename = "gravity_m_per_s2")]
    pub gravity: f64,
}

impl Default for Water {
    /// Fresh water.
    fn default() -> Self {
        Self {
            density: 1000.0,
            gravity: 9.81,
        }
    }
}

impl Water {
    /// Gauge pressure at depth `d`.
    pub fn pressure(&self, depth: f64) -> f64 {
        self.density * self.gravity * depth
    }
}

/// Design inputs for the umbrella mechanism before calibration.
///
/// Lengths describe the proportions of the skeleton; [`UmbrellaDesign::calibrate`]
/// rescales them so the absolute volumes match the system mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UmbrellaDesign {
    pub arm_count: u32,
    pub arm_length_m: f64,
    pub pod_half_length_m: f64,
    pub base_radius_m: f64,
    /// Pod-only volume change over full servo travel, relative to the maximum pod volume.
    pub pod_volume_change: f64,
    /// Same volume change relative to the nominal full-system volume.
    pub system_volume_change: f64,
    /// Servo fraction at which the full system is neutrally buoyant at the surface.
    pub trim_servo_fraction: f64,
    /// Screw-nut link angle at the retracted end of travel.
    pub link_angle_retracted_deg: f64,
    /// Screw-nut link angle at full actuation.
    pub link_angle_extended_deg: f64,
}

impl Default for UmbrellaDesign {
    fn default() -> Self {
        Self {
            arm_count: 6,
            arm_length_m: 0.094,
            pod_half_length_m: 0.085,
            base_radius_m: 0.017,
            pod_volume_change: 0.057,
            system_volume_change: 0.036,
            trim_servo_fraction: 0.0,
            link_angle_retracted_deg: 60.0,
            link_angle_extended_deg: 12.0,
        }
    }
}

/// Calibrated umbrella geometry with absolute dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UmbrellaGeometry {
    pub arm_count: u32,
    pub arm_length: f64,
    pub pod_half_length: f64,
    pub base_radius: f64,
    /// Displaced volume of the full system at neutral trim.
    pub nominal_volume: f64,
    /// Share of `nominal_volume` that belongs to the morphable pod at trim.
    pub pod_fraction: f64,
    /// Inter-arm fold angle at `u = 0`; the fold closes linearly to zero at `u = 1`.
    pub max_fold_angle: f64,
    pub trim_servo_fraction: f64,
    pub link_angle_retracted: f64,
    pub link_angle_extended: f64,
    /// Lateral skin area at full actuation, used for the actuation force.
    pub skin_area: f64,
}

impl UmbrellaDesign {
    fn check(&self) -> Result<()> {
        let err = |m: &str| Err(BuoyancyError::Geometry(m.to_string()));
        if self.arm_count != 6 {
            return err("arm_count must be 6 (hexagonal bipyramid)");
        }
        let lengths = [
            self.arm_length_m,
            self.pod_half_length_m,
            self.base_radius_m,
        ];
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return err("all lengths must be positive");
        }
        if self.arm_length_m <= self.pod_half_length_m {
            return err("arm_length must exceed pod_half_length");
        }
        if !(self.pod_volume_change > 0.0 && self.pod_volume_change < 0.5) {
            return err("pod_volume_change must lie in (0, 0.5)");
        }
        if !(self.system_volume_change > 0.0 && self.system_volume_change < self.pod_volume_change)
        {
            return err("system_volume_change must lie in (0, pod_volume_change)");
        }
        if !(0.0..=1.0).contains(&self.trim_servo_fraction) {
            return err("trim_servo_fraction must lie in [0, 1]");
        }
        let (lo, hi) = (self.link_angle_extended_deg, self.link_angle_retracted_deg);
        if !(lo > 0.0 && hi < 90.0 && lo < hi) {
            return err("link angles must satisfy 0 < extended < retracted < 90 deg");
        }
        Ok(())
    }

    /// Solves for the fold angle, the absolute scale and the fixed volume share.
    ///
    /// `system_mass` is the mass that is neutrally buoyant at the surface with the
    /// servo at `trim_servo_fraction`.
    pub fn calibrate(&self, system_mass: f64, water: &Water) -> Result<UmbrellaGeometry> {
        self.check()?;
        if !(system_mass.is_finite() && system_mass > 0.0) {
            return Err(BuoyancyError::NonPositiveMass(system_mass));
        }
        let n = self.arm_count;
        let (l, h, b) = (
            self.arm_length_m,
            self.pod_half_length_m,
            self.base_radius_m,
        );

        // Fold angle from the pod-only ratio; the ratio is scale invariant.
        let target_ratio = 1.0 - self.pod_volume_change;
        let full = loft_volume(n, l, h, b, 0.0);
        let ratio = |beta: f64| loft_volume(n, l, h, b, beta) / full;
        let mut lo = 0.0;
        let mut hi = 0.5 * (PI / 2.0 - PI / n as f64);
        if ratio(hi) > target_ratio {
            return Err(BuoyancyError::Geometry(
                "requested pod volume change exceeds the fold range".into(),
            ));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ratio(mid) > target_ratio {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let max_fold_angle = 0.5 * (lo + hi);

        // Absolute scale: the pod swing must equal the system share of the nominal volume.
        let nominal_volume = system_mass / water.density;
        let pod_max_target = self.system_volume_change / self.pod_volume_change * nominal_volume;
        let scale = (pod_max_target / full).cbrt();
        let (l, h, b) = (l * scale, h * scale, b * scale);

        let fold_at_trim = max_fold_angle * (1.0 - self.trim_servo_fraction);
        let pod_at_trim = loft_volume(n, l, h, b, fold_at_trim);
        let pod_fraction = pod_at_trim / nominal_volume;
        if !(pod_fraction > 0.0 && pod_fraction < 1.0) {
            return Err(BuoyancyError::Geometry(format!(
                "pod fraction {pod_fraction} outside (0, 1)"
            )));
        }

        Ok(UmbrellaGeometry {
            arm_count: n,
            arm_length: l,
            pod_half_length: h,
            base_radius: b,
            nominal_volume,
            pod_fraction,
            max_fold_angle,
            trim_servo_fraction: self.trim_servo_fraction,
            link_angle_retracted: self.link_angle_retracted_deg.to_radians(),
            link_angle_extended: self.link_angle_extended_deg.to_radians(),
            skin_area: lateral_area(n, l, h, b, 0.0, 1440),
        })
    }
}

impl UmbrellaGeometry {
    /// Radius of the arm tips in the equatorial plane.
    pub fn tip_radius(&self) -> f64 {
        tip_radius(self.arm_length, self.pod_half_length, self.base_radius)
    }

    /// Inter-arm fold angle at servo fraction `u`.
    pub fn fold_angle(&self, u: f64) -> f64 {
        self.max_fold_angle * (1.0 - u)
    }

    /// Volume of the non-morphable parts (camera case, gripper, fittings).
    pub fn fixed_volume(&self) -> f64 {
        self.nominal_volume * (1.0 - self.pod_fraction)
    }

    /// Equatorial outline vertices (tip, fold, tip, fold, ...) counter-clockwise.
    pub fn equator_outline(&self, u: f64) -> Vec<[f64; 2]> {
        outline(self.arm_count, self.tip_radius(), self.fold_angle(u))
    }

    /// Lever arm of the screw-nut link at servo fraction `u`.
    pub fn leverage_arm(&self, u: f64) -> f64 {
        let angle =
            self.link_angle_retracted + (self.link_angle_extended - self.link_angle_retracted) * u;
        self.arm_length * angle.sin()
    }
}

fn check_servo(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(BuoyancyError::ServoOutOfRange(u))
    }
}

fn check_depth(d: f64) -> Result<()> {
    if d.is_finite() && d >= 0.0 {
        Ok(())
    } else {
        Err(BuoyancyError::InvalidDepth(d))
    }
}

fn tip_radius(arm_length: f64, half_length: f64, base_radius: f64) -> f64 {
    base_radius + (arm_length * arm_length - half_length * half_length).sqrt()
}

fn outline(n: u32, tip: f64, fold_angle: f64) -> Vec<[f64; 2]> {
    let half_sector = PI / n as f64;
    let fold_radius = tip * half_sector.cos() - tip * half_sector.sin() * fold_angle.tan();
    (0..2 * n)
        .map(|i| {
            let theta = i as f64 * half_sector;
            let r = if i % 2 == 0 { tip } else { fold_radius };
            [r * theta.cos(), r * theta.sin()]
        })
        .collect()
}

/// `(∮ rho dθ, ∮ rho² dθ)` along a straight edge from `a` to `b`, swept counter-clockwise.
fn edge_polar_integrals(a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let cross = a[0] * b[1] - a[1] * b[0];
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    let (ux, uy) = (dx / len, dy / len);
    // Distance of the supporting line from the origin, and arc-length
    // coordinates of the endpoints measured from the foot of the perpendicular.
    let p = cross / len;
    let sa = a[0] * ux + a[1] * uy;
    let sb = b[0] * ux + b[1] * uy;
    let first = p * ((sb / p).asinh() - (sa / p).asinh());
    (first, cross)
}

fn loft_volume(n: u32, arm_length: f64, half_length: f64, base_radius: f64, fold: f64) -> f64 {
    let pts = outline(n, tip_radius(arm_length, half_length, base_radius), fold);
    let (mut i1, mut i2) = (0.0, 0.0);
    for k in 0..pts.len() {
        let (f, s) = edge_polar_integrals(pts[k], pts[(k + 1) % pts.len()]);
        i1 += f;
        i2 += s;
    }
    half_length / 3.0 * (2.0 * PI * base_radius * base_radius + base_radius * i1 + i2)
}

/// Lateral area of the loft, triangulated with `samples` rulings per half.
fn lateral_area(
    n: u32,
    arm_length: f64,
    half_length: f64,
    base_radius: f64,
    fold: f64,
    samples: usize,
) -> f64 {
    let pts = outline(n, tip_radius(arm_length, half_length, base_radius), fold);
    let rho = |theta: f64| polar_radius(&pts, theta);
    let ring = |theta: f64| {
        [
            half_length,
            base_radius * theta.cos(),
            base_radius * theta.sin(),
        ]
    };
    let equator = |theta: f64| {
        let r = rho(theta);
        [0.0, r * theta.cos(), r * theta.sin()]
    };
    let tri = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| {
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let cx = u[1] * v[2] - u[2] * v[1];
        let cy = u[2] * v[0] - u[0] * v[2];
        let cz = u[0] * v[1] - u[1] * v[0];
        0.5 * (cx * cx + cy * cy + cz * cz).sqrt()
    };
    let mut area = 0.0;
    for j in 0..samples {
        let t0 = 2.0 * PI * j as f64 / samples as f64;
        let t1 = 2.0 * PI * (j + 1) as f64 / samples as f64;
        let (r0, r1, e0, e1) = (ring(t0), ring(t1), equator(t0), equator(t1));
        area += tri(r0, r1, e1) + tri(r0, e1, e0);
    }
    2.0 * area
}

/// Radius of a star-shaped closed polygon along the ray at angle `theta`.
fn polar_radius(pts: &[[f64; 2]], theta: f64) -> f64 {
    let step = 2.0 * PI / pts.len() as f64;
    let theta = theta.rem_euclid(2.0 * PI);
    let k = ((theta / step).floor() as usize).min(pts.len() - 1);
    let a = pts[k];
    let b = pts[(k + 1) % pts.len()];
    let (ex, ey) = (theta.cos(), theta.sin());
    let cross_ab = a[0] * b[1] - a[1] * b[0];
    let denom = ex * (b[1] - a[1]) - ey * (b[0] - a[0]);
    cross_ab / denom
}

/// Surface-level pod volume at servo fraction `u`.
pub fn umbrella_volume(u: f64, geom: &UmbrellaGeometry) -> Result<f64> {
    check_servo(u)?;
    Ok(loft_volume(
        geom.arm_count,
        geom.arm_length,
        geom.pod_half_length,
        geom.base_radius,
        geom.fold_angle(u),
    ))
}

/// Axial screw-nut force needed to hold the skin at `u` against the water
/// pressure at depth `d`.
pub fn actuation_force(u: f64, d: f64, geom: &UmbrellaGeometry, water: &Water) -> Result<f64> {
    check_servo(u)?;
    check_depth(d)?;
    let half_chord = geom.tip_radius() * (PI / geom.arm_count as f64).sin();
    let pressure = water.pressure(d);
    Ok(pressure * geom.skin_area * half_chord / geom.leverage_arm(u))
}

/// Piecewise-linear fraction of the surface volume the skin retains at depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CurvePoint>", into = "Vec<CurvePoint>")]
pub struct SkinCompressionCurve {
    breakpoints: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvePoint {
    pub depth_m: f64,
    pub retained_fraction: f64,
}

impl TryFrom<Vec<CurvePoint>> for SkinCompressionCurve {
    type Error = BuoyancyError;

    fn try_from(points: Vec<CurvePoint>) -> Result<Self> {
        Self::new(
            points
                .into_iter()
                .map(|p| (p.depth_m, p.retained_fraction))
                .collect(),
        )
    }
}

impl From<SkinCompressionCurve> for Vec<CurvePoint> {
    fn from(curve: SkinCompressionCurve) -> Self {
        curve
            .breakpoints
            .into_iter()
            .map(|(depth_m, retained_fraction)| CurvePoint {
                depth_m,
                retained_fraction,
            })
            .collect()
    }
}

impl Default for SkinCompressionCurve {
    fn default() -> Self {
        Self {
            breakpoints: vec![(0.0, 1.0), (7.0, 0.93)],
        }
    }
}

impl SkinCompressionCurve {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        let err = |m: &str| Err(BuoyancyError::Curve(m.to_string()));
        match breakpoints.first() {
            Some(&(d, f)) if d == 0.0 && f == 1.0 => {}
            Some(_) => return err("first breakpoint must be (0 m, 1.0)"),
            None => return err("at least one breakpoint is required"),
        }
        for w in breakpoints.windows(2) {
            let ((d0, f0), (d1, f1)) = (w[0], w[1]);
            if !(d1 > d0 && d1.is_finite()) {
                return err("depths must be strictly increasing");
            }
            if f1 > f0 {
                return err("retained fractions must be nonincreasing");
            }
            if !(f1 > 0.0) {
                return err("retained fractions must lie in (0, 1]");
            }
        }
        Ok(Self { breakpoints })
    }

    /// A skin that does not compress at all.
    pub fn incompressible() -> Self {
        Self {
            breakpoints: vec![(0.0, 1.0)],
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    /// Depth of the last breakpoint; the curve is constant beyond it.
    pub fn last_depth(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |p| p.0)
    }
}

pub fn skin_retained_fraction(d: f64, curve: &SkinCompressionCurve) -> f64 {
    let pts = &curve.breakpoints;
    if d <= 0.0 {
        return pts[0].1;
    }
    for w in pts.windows(2) {
        let ((d0, f0), (d1, f1)) = (w[0], w[1]);
        if d <= d1 {
            return f0 + (f1 - f0) * (d - d0) / (d1 - d0);
        }
    }
    pts[pts.len() - 1].1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuoyancyState {
    pub servo_fraction: f64,
    pub depth: f64,
    pub effective_volume: f64,
}

impl BuoyancyState {
    pub fn new(
        servo_fraction: f64,
        depth: f64,
        geom: &UmbrellaGeometry,
        curve: &SkinCompressionCurve,
    ) -> Result<Self> {
        check_depth(depth)?;
        let pod = umbrella_volume(servo_fraction, geom)?;
        let effective_volume = pod * skin_retained_fraction(depth, curve) + geom.fixed_volume();
        Ok(Self {
            servo_fraction,
            depth,
            effective_volume,
        })
    }
}

/// Upward net force (buoyancy minus weight).
pub fn net_buoyancy_force(state: &BuoyancyState, total_mass: f64, water: &Water) -> Result<f64> {
    net_buoyancy_force_with(state, total_mass, 0.0, water)
}

/// As [`net_buoyancy_force`], with extra displaced volume carried along
/// (retained gripper water, a held object).
pub fn net_buoyancy_force_with(
    state: &BuoyancyState,
    total_mass: f64,
    extra_volume: f64,
    water: &Water,
) -> Result<f64> {
    if !(total_mass > 0.0) {
        return Err(BuoyancyError::NonPositiveMass(total_mass));
    }
    let displaced = state.effective_volume + extra_volume;
    Ok(water.density * water.gravity * displaced - total_mass * water.gravity)
}

/// Maximum depth from which the pod can still return under its own buoyancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "depth_m")]
pub enum DepthLimit {
    Finite(f64),
    Unbounded,
}

impl DepthLimit {
    pub fn as_f64(&self) -> f64 {
        match *self {
            DepthLimit::Finite(d) => d,
            DepthLimit::Unbounded => f64::INFINITY,
        }
    }
}

pub const DEPTH_TOLERANCE: f64 = 1e-3;

pub fn max_sustainable_depth(
    total_mass: f64,
    geom: &UmbrellaGeometry,
    curve: &SkinCompressionCurve,
    water: &Water,
) -> Result<DepthLimit> {
    let force = |u: f64, d: f64| -> Result<f64> {
        net_buoyancy_force(&BuoyancyState::new(u, d, geom, curve)?, total_mass, water)
    };
    let retracted = force(0.0, 0.0)?;
    let extended = force(1.0, 0.0)?;
    // Relative slack so a mass calibrated exactly at an end stop still qualifies.
    let slack = 1e-9 * total_mass * water.gravity;
    if retracted > slack || extended < -slack {
        return Err(BuoyancyError::NoNeutralTrim {
            mass: total_mass,
            retracted,
            extended,
        });
    }
    let floor = curve.last_depth();
    if force(1.0, floor)? >= 0.0 {
        return Ok(DepthLimit::Unbounded);
    }
    let (mut lo, mut hi) = (0.0, floor);
    while hi - lo > DEPTH_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if force(1.0, mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DepthLimit::Finite(lo))
}

/// Servo fraction giving zero net force at depth `d`, if one exists in [0, 1].
pub fn neutral_servo_fraction(
    d: f64,
    total_mass: f64,
    extra_volume: f64,
    geom: &UmbrellaGeometry,
    curve: &SkinCompressionCurve,
    water: &Water,
) -> Result<Option<f64>> {
    let force = |u: f64| -> Result<f64> {
        net_buoyancy_force_with(
            &BuoyancyState::new(u, d, geom, curve)?,
            total_mass,
            extra_volume,
            water,
        )
    };
    let (f0, f1) = (force(0.0)?, force(1.0)?);
    let slack = 1e-9 * total_mass * water.gravity;
    if f0 > slack || f1 < -slack {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if force(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> UmbrellaGeometry {
        UmbrellaDesign::default()
            .calibrate(1.080, &Water::default())
            .unwrap()
    }

    /// Independent volume route: ray-cast the outline at `n` angles, triangulate
    /// both lofts plus the end caps, and sum signed tetrahedra against the origin.
    fn triangulated_volume(g: &UmbrellaGeometry, u: f64, n: usize) -> f64 {
        let pts = g.equator_outline(u);
        let (h, b) = (g.pod_half_length, g.base_radius);
        let ray = |theta: f64| -> f64 {
            let (ex, ey) = (theta.cos(), theta.sin());
            // Scan every edge and keep the hit with positive parameters.
            let mut best = f64::INFINITY;
            for k in 0..pts.len() {
                let a = pts[k];
                let c = pts[(k + 1) % pts.len()];
                let (dx, dy) = (c[0] - a[0], c[1] - a[1]);
                let denom = ex * dy - ey * dx;
                if denom.abs() < 1e-15 {
                    continue;
                }
                let r = (a[0] * dy - a[1] * dx) / denom;
                let t = (a[0] * ey - a[1] * ex) / denom;
                if r > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&t) {
                    best = best.min(r);
                }
            }
            best
        };
        let signed = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| {
            (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]))
                / 6.0
        };
        let mut vol = 0.0;
        for j in 0..n {
            let t0 = 2.0 * PI * j as f64 / n as f64;
            let t1 = 2.0 * PI * (j + 1) as f64 / n as f64;
            let q0 = [0.0, ray(t0) * t0.cos(), ray(t0) * t0.sin()];
            let q1 = [0.0, ray(t1) * t1.cos(), ray(t1) * t1.sin()];
            for side in [1.0, -1.0] {
                let p0 = [side * h, b * t0.cos(), b * t0.sin()];
                let p1 = [side * h, b * t1.cos(), b * t1.sin()];
                let cap = [side * h, 0.0, 0.0];
                // Orientation flips between the two halves.
                let s = side;
                vol += s * signed(p0, q0, q1);
                vol += s * signed(p0, q1, p1);
                vol += s * signed(cap, p0, p1);
            }
        }
        vol.abs()
    }

    #[test]
    fn full_actuation_defines_max_volume() {
        let g = geom();
        let vmax = umbrella_volume(1.0, &g).unwrap();
        for i in 0..100 {
            assert!(umbrella_volume(i as f64 / 100.0, &g).unwrap() < vmax);
        }
    }

    #[test]
    fn retracted_volume_is_943_permille_of_max() {
        let g = geom();
        let v0 = umbrella_volume(0.0, &g).unwrap();
        let v1 = umbrella_volume(1.0, &g).unwrap();
        assert!((v0 / v1 - 0.943).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_triangulation_at_half_travel() {
        let g = geom();
        let exact = umbrella_volume(0.5, &g).unwrap();
        let oracle = triangulated_volume(&g, 0.5, 3600);
        assert!(
            ((exact - oracle) / oracle).abs() < 1e-3,
            "{exact} vs {oracle}"
        );
        // Off-grid sampling too (outline vertices not hit exactly).
        let oracle = triangulated_volume(&g, 0.5, 3001);
        assert!(
            ((exact - oracle) / oracle).abs() < 1e-3,
            "{exact} vs {oracle}"
        );
    }

    #[test]
    fn closed_form_matches_triangulation_across_travel() {
        let g = geom();
        for u in [0.0, 0.1, 0.37, 0.8, 1.0] {
            let exact = umbrella_volume(u, &g).unwrap();
            let oracle = triangulated_volume(&g, u, 2400);
            assert!(((exact - oracle) / oracle).abs() < 1e-4, "u={u}");
        }
    }

    #[test]
    fn servo_out_of_range_is_rejected() {
        let g = geom();
        assert!(matches!(
            umbrella_volume(1.01, &g),
            Err(BuoyancyError::ServoOutOfRange(_))
        ));
        assert!(umbrella_volume(-0.1, &g).is_err());
        assert!(umbrella_volume(f64::NAN, &g).is_err());
        assert!(actuation_force(0.5, -1.0, &g, &Water::default()).is_err());
    }

    #[test]
    fn system_volume_change_is_36_permille_of_nominal() {
        let g = geom();
        let dv = umbrella_volume(1.0, &g).unwrap() - umbrella_volume(0.0, &g).unwrap();
        assert!((dv / g.nominal_volume - 0.036).abs() < 1e-9);
    }

    #[test]
    fn actuation_force_is_zero_at_surface() {
        let g = geom();
        let w = Water::default();
        for u in [0.0, 0.3, 1.0] {
            assert_eq!(actuation_force(u, 0.0, &g, &w).unwrap(), 0.0);
        }
    }

    #[test]
    fn actuation_force_doubles_with_depth() {
        let g = geom();
        let w = Water::default();
        for u in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let f1 = actuation_force(u, 0.5, &g, &w).unwrap();
            let f2 = actuation_force(u, 1.0, &g, &w).unwrap();
            assert_eq!(f2, 2.0 * f1);
        }
    }

    #[test]
    fn actuation_force_grows_as_lever_shrinks() {
        let g = geom();
        let w = Water::default();
        let mut prev = 0.0;
        for i in 0..=50 {
            let u = i as f64 / 50.0;
            let f = actuation_force(u, 0.5, &g, &w).unwrap();
            assert!(f > prev);
            if i > 0 {
                assert!(g.leverage_arm(u) < g.leverage_arm(u - 0.02));
            }
            prev = f;
        }
    }

    #[test]
    fn retained_fraction_examples() {
        let c = SkinCompressionCurve::default();
        assert_eq!(skin_retained_fraction(0.0, &c), 1.0);
        assert!((skin_retained_fraction(7.0, &c) - 0.93).abs() < 1e-12);
        assert!((skin_retained_fraction(3.5, &c) - 0.965).abs() < 1e-12);
        assert!((skin_retained_fraction(20.0, &c) - 0.93).abs() < 1e-12);
    }

    #[test]
    fn curve_validation() {
        assert!(SkinCompressionCurve::new(vec![]).is_err());
        assert!(SkinCompressionCurve::new(vec![(1.0, 1.0)]).is_err());
        assert!(SkinCompressionCurve::new(vec![(0.0, 1.0), (2.0, 0.9), (2.0, 0.8)]).is_err());
        assert!(SkinCompressionCurve::new(vec![(0.0, 1.0), (2.0, 0.9), (3.0, 0.95)]).is_err());
        assert!(SkinCompressionCurve::new(vec![(0.0, 1.0), (2.0, 0.0)]).is_err());
        let json =
            r#"[{"depth_m":0.0,"retained_fraction":1.0},{"depth_m":5.0,"retained_fraction":1.2}]"#;
        assert!(serde_json::from_str::<SkinCompressionCurve>(json).is_err());
    }

    #[test]
    fn neutral_volume_gives_zero_force() {
        let w = Water::default();
        let state = BuoyancyState {
            servo_fraction: 0.5,
            depth: 1.0,
            effective_volume: 1.2 / w.density,
        };
        assert!(net_buoyancy_force(&state, 1.2, &w).unwrap().abs() < 1e-12);
        assert!(net_buoyancy_force(&state, 0.0, &w).is_err());
        assert!(net_buoyancy_force(&state, -1.0, &w).is_err());
    }

    #[test]
    fn mid_travel_trim_surplus_at_full_actuation() {
        let w = Water::default();
        let design = UmbrellaDesign {
            trim_servo_fraction: 0.5,
            ..Default::default()
        };
        let g = design.calibrate(1.080, &w).unwrap();
        let c = SkinCompressionCurve::default();
        let state = BuoyancyState::new(1.0, 0.0, &g, &c).unwrap();
        let f = net_buoyancy_force(&state, 1.080, &w).unwrap();
        let expected = w.density
            * w.gravity
            * (umbrella_volume(1.0, &g).unwrap() - umbrella_volume(0.5, &g).unwrap());
        assert!(f > 0.0);
        assert!((f - expected).abs() < 1e-12);
    }

    #[test]
    fn full_actuation_near_six_metres_is_about_neutral() {
        let w = Water::default();
        let g = geom();
        let c = SkinCompressionCurve::default();
        let f =
            net_buoyancy_force(&BuoyancyState::new(1.0, 6.0, &g, &c).unwrap(), 1.080, &w).unwrap();
        assert!(f.abs() < 0.05, "{f}");
    }

    #[test]
    fn default_max_depth_is_about_six_metres() {
        let w = Water::default();
        let g = geom();
        let d = max_sustainable_depth(1.080, &g, &SkinCompressionCurve::default(), &w).unwrap();
        let d = d.as_f64();
        assert!((d - 6.0).abs() <= 0.5, "{d}");
    }

    #[test]
    fn incompressible_skin_is_unbounded() {
        let g = geom();
        let d = max_sustainable_depth(
            1.080,
            &g,
            &SkinCompressionCurve::incompressible(),
            &Water::default(),
        )
        .unwrap();
        assert_eq!(d, DepthLimit::Unbounded);
    }

    #[test]
    fn untrimmable_mass_is_a_configuration_error() {
        let g = geom();
        let c = SkinCompressionCurve::default();
        let w = Water::default();
        assert!(matches!(
            max_sustainable_depth(1.5, &g, &c, &w),
            Err(BuoyancyError::NoNeutralTrim { .. })
        ));
        assert!(matches!(
            max_sustainable_depth(0.8, &g, &c, &w),
            Err(BuoyancyError::NoNeutralTrim { .. })
        ));
    }

    #[test]
    fn neutral_servo_solves_zero_force() {
        let w = Water::default();
        let g = geom();
        let c = SkinCompressionCurve::default();
        let u = neutral_servo_fraction(2.0, 1.080, 0.0, &g, &c, &w)
            .unwrap()
            .unwrap();
        let f =
            net_buoyancy_force(&BuoyancyState::new(u, 2.0, &g, &c).unwrap(), 1.080, &w).unwrap();
        assert!(f.abs() < 1e-9);
        assert!(neutral_servo_fraction(2.0, 2.0, 0.0, &g, &c, &w)
            .unwrap()
            .is_none());
    }

    #[test]
    fn bad_design_is_rejected() {
        let w = Water::default();
        let bad = UmbrellaDesign {
            arm_count: 5,
            ..Default::default()
        };
        assert!(bad.calibrate(1.08, &w).is_err());
        let bad = UmbrellaDesign {
            arm_length_m: 0.05,
            ..Default::default()
        };
        assert!(bad.calibrate(1.08, &w).is_err());
        assert!(UmbrellaDesign::default().calibrate(0.0, &w).is_err());
    }
}
