//! Circular-orbit kinematics and pass geometry over a fixed ground station.
//!
//! The Earth is a non-rotating sphere. The satellite moves on a great circle
//! and the ground station sits a fixed great-circle distance off that track,
//! so closest approach happens at `t = 0` and every pass is symmetric in time.
//!
//! Frame: Earth centre at the origin, orbit in the x-y plane, satellite at
//! `(r cos wt, r sin wt, 0)`, ground station at `(Re cos b, 0, Re sin b)` with
//! `b = offset / Re`.

use crate::error::{domain, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Mean equatorial Earth radius (km).
pub const EARTH_RADIUS_KM: f64 = 6378.137;
/// Earth gravitational parameter (km^3/s^2).
pub const EARTH_GM_KM3_S2: f64 = 398_600.441_8;
/// Speed of light in vacuum (km/s).
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

/// Central-difference step for line-of-sight rates.
const SLEW_DT_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitSpec {
    /// Height above the mean Earth radius.
    pub altitude_km: f64,
    /// Ground-track distance from the station at closest approach.
    pub ground_track_offset_km: f64,
}

impl OrbitSpec {
    pub fn new(altitude_km: f64, ground_track_offset_km: f64) -> Result<Self> {
        let orbit = OrbitSpec {
            altitude_km,
            ground_track_offset_km,
        };
        orbit.validate()?;
        Ok(orbit)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_km > 0.0) || !self.altitude_km.is_finite() {
            return domain(format!("altitude must be > 0 km, got {}", self.altitude_km));
        }
        if !(self.ground_track_offset_km >= 0.0) || !self.ground_track_offset_km.is_finite() {
            return domain(format!(
                "ground track offset must be >= 0 km, got {}",
                self.ground_track_offset_km
            ));
        }
        Ok(())
    }

    fn radius_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }
}

impl Default for OrbitSpec {
    fn default() -> Self {
        OrbitSpec {
            altitude_km: 550.0,
            ground_track_offset_km: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub orbital_speed_km_s: f64,
    pub period_s: f64,
    pub orbital_angular_rate_rad_s: f64,
}

/// One instant of the encounter, timed from closest approach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassSample {
    pub t_s: f64,
    pub slant_range_km: f64,
    pub zenith_rad: f64,
    /// Negative when the satellite is below the local horizon.
    pub elevation_rad: f64,
    pub central_angle_rad: f64,
}

impl PassSample {
    pub fn above_horizon(&self) -> bool {
        self.elevation_rad >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlewRates {
    /// Line-of-sight rotation rate seen from the ground station.
    pub ogs_rate_rad_s: f64,
    /// Rate the satellite body must rotate to keep pointing at the station.
    pub sat_rate_rad_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointAhead {
    pub light_time_s: f64,
    pub angle_rad: f64,
}

/// Circular-orbit speed, period and angular rate from vis-viva.
pub fn orbit_kinematics(orbit: &OrbitSpec) -> Result<Kinematics> {
    if !(orbit.altitude_km > 0.0) {
        return domain(format!(
            "altitude must be > 0 km, got {}",
            orbit.altitude_km
        ));
    }
    Ok(kinematics_at_radius(orbit.radius_km()))
}

fn kinematics_at_radius(r: f64) -> Kinematics {
    let v = (EARTH_GM_KM3_S2 / r).sqrt();
    Kinematics {
        orbital_speed_km_s: v,
        period_s: 2.0 * PI * r / v,
        orbital_angular_rate_rad_s: v / r,
    }
}

fn angular_rate(orbit: &OrbitSpec) -> f64 {
    kinematics_at_radius(orbit.radius_km()).orbital_angular_rate_rad_s
}

type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn satellite_position(orbit: &OrbitSpec, t_s: f64) -> Vec3 {
    let r = orbit.radius_km();
    let a = angular_rate(orbit) * t_s;
    [r * a.cos(), r * a.sin(), 0.0]
}

fn station_position(orbit: &OrbitSpec) -> Vec3 {
    let b = orbit.ground_track_offset_km / EARTH_RADIUS_KM;
    [EARTH_RADIUS_KM * b.cos(), 0.0, EARTH_RADIUS_KM * b.sin()]
}

fn line_of_sight(orbit: &OrbitSpec, t_s: f64) -> Vec3 {
    let d = sub(satellite_position(orbit, t_s), station_position(orbit));
    scale(d, 1.0 / norm(d))
}

/// Geometry of the station-satellite link at time `t_s` from closest approach.
pub fn pass_sample(orbit: &OrbitSpec, t_s: f64) -> PassSample {
    let r = orbit.radius_km();
    let along = angular_rate(orbit) * t_s;
    let across = orbit.ground_track_offset_km / EARTH_RADIUS_KM;
    let cos_gamma = (along.cos() * across.cos()).clamp(-1.0, 1.0);
    let gamma = cos_gamma.acos();
    let slant =
        (EARTH_RADIUS_KM * EARTH_RADIUS_KM + r * r - 2.0 * EARTH_RADIUS_KM * r * cos_gamma).sqrt();
    let cos_zenith = ((r * cos_gamma - EARTH_RADIUS_KM) / slant).clamp(-1.0, 1.0);
    let zenith = cos_zenith.acos();
    PassSample {
        t_s,
        slant_range_km: slant,
        zenith_rad: zenith,
        elevation_rad: FRAC_PI_2 - zenith,
        central_angle_rad: gamma,
    }
}

/// Half-width of the interval around closest approach during which the
/// elevation stays at or above `min_elevation_rad`. `None` if never reached.
pub fn visibility_half_window(orbit: &OrbitSpec, min_elevation_rad: f64) -> Option<f64> {
    if pass_sample(orbit, 0.0).elevation_rad < min_elevation_rad {
        return None;
    }
    // Elevation decreases monotonically in |t| up to half an orbit.
    let mut lo = 0.0;
    let mut hi = PI / angular_rate(orbit);
    if pass_sample(orbit, hi).elevation_rad >= min_elevation_rad {
        return Some(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pass_sample(orbit, mid).elevation_rad >= min_elevation_rad {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Some(lo)
}

/// Total time spent at or above `min_elevation_rad` during one encounter.
pub fn visibility_duration_s(orbit: &OrbitSpec, min_elevation_rad: f64) -> f64 {
    visibility_half_window(orbit, min_elevation_rad).map_or(0.0, |h| 2.0 * h)
}

/// Uniform samples `t = k * dt` over the part of the pass above `min_elevation_rad`.
pub fn pass_profile(
    orbit: &OrbitSpec,
    dt_s: f64,
    min_elevation_rad: f64,
) -> Result<Vec<PassSample>> {
    if !(dt_s > 0.0) || !dt_s.is_finite() {
        return domain(format!("sampling step must be > 0 s, got {dt_s}"));
    }
    let Some(half) = visibility_half_window(orbit, min_elevation_rad) else {
        return Ok(Vec::new());
    };
    let k_max = (half / dt_s + 1e-9).floor() as i64;
    Ok((-k_max..=k_max)
        .map(|k| pass_sample(orbit, k as f64 * dt_s))
        .collect())
}

/// Tracking rates of the ground telescope and the satellite body.
pub fn slew_rates(orbit: &OrbitSpec, t_s: f64) -> SlewRates {
    let before = line_of_sight(orbit, t_s - SLEW_DT_S);
    let now = line_of_sight(orbit, t_s);
    let after = line_of_sight(orbit, t_s + SLEW_DT_S);
    let derivative = scale(sub(after, before), 0.5 / SLEW_DT_S);
    // Angular velocity of the unit line-of-sight vector: u x du/dt.
    let los_omega = cross(now, derivative);
    let orbit_omega = [0.0, 0.0, angular_rate(orbit)];
    SlewRates {
        ogs_rate_rad_s: norm(los_omega),
        sat_rate_rad_s: norm(sub(los_omega, orbit_omega)),
    }
}

/// One-way light time and the point-ahead angle it implies.
pub fn point_ahead(orbit: &OrbitSpec, t_s: f64) -> PointAhead {
    let sample = pass_sample(orbit, t_s);
    let rates = slew_rates(orbit, t_s);
    point_ahead_from(sample.slant_range_km, rates.ogs_rate_rad_s)
}

pub fn point_ahead_from(slant_range_km: f64, ogs_rate_rad_s: f64) -> PointAhead {
    let light_time_s = slant_range_km / SPEED_OF_LIGHT_KM_S;
    PointAhead {
        light_time_s,
        angle_rad: ogs_rate_rad_s * light_time_s,
    }
}

/// Small-angle footprint diameter in metres.
pub fn footprint_diameter_m(fov_rad: f64, slant_range_km: f64) -> Result<f64> {
    if !(fov_rad >= 0.0) {
        return domain(format!("field of view must be >= 0, got {fov_rad}"));
    }
    Ok(fov_rad * slant_range_km * 1e3)
}
