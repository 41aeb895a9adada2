//! Sun–Earth normalized units: length is the mean Sun–Earth distance, time is
//! the inverse of the mean motion.

/// Length unit in km.
pub const LENGTH_UNIT_KM: f64 = 1.49589e8;
/// Mean motion in rad/s.
pub const MEAN_MOTION_RAD_S: f64 = 1.99099e-7;
/// Mass ratio of the Sun–(Earth+Moon) system.
pub const EARTH_SUN_MU: f64 = 3.04036e-6;

const SECONDS_PER_DAY: f64 = 86400.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub length_km: f64,
    pub omega_rad_s: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { length_km: LENGTH_UNIT_KM, omega_rad_s: MEAN_MOTION_RAD_S }
    }
}

pub fn days_to_nondim(days: f64) -> f64 {
    days * SECONDS_PER_DAY * MEAN_MOTION_RAD_S
}

pub fn nondim_to_days(t: f64) -> f64 {
    t / (SECONDS_PER_DAY * MEAN_MOTION_RAD_S)
}

pub fn km_to_nondim(km: f64) -> f64 {
    km / LENGTH_UNIT_KM
}

pub fn nondim_to_km(d: f64) -> f64 {
    d * LENGTH_UNIT_KM
}

/// Velocity unit in km/s.
pub fn velocity_unit_km_s() -> f64 {
    LENGTH_UNIT_KM * MEAN_MOTION_RAD_S
}
