//! Constants and unit conversions shared across the crate.

/// Free-space propagation speed in m/s, rounded to 3e8.
///
/// With this value the 5 ns excess-delay gate and the 1.5 m path-length gate
/// coincide.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

pub const PI: f64 = core::f64::consts::PI;

pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg * (PI / 180.0)
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad * (180.0 / PI)
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

/// Watts to dBm. Zero power maps to negative infinity.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * libm::log10(w) + 30.0
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, (dbm - 30.0) / 10.0)
}
