//! Unit conversions between config-facing values and SI angular units.

use std::f64::consts::TAU;

/// Ordinary frequency in MHz (i.e. ω/2π) to angular frequency in rad/s.
pub fn mhz_to_rad(f_mhz: f64) -> f64 {
    TAU * f_mhz * 1e6
}

pub fn rad_to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

/// Ordinary frequency in kHz to rad/s.
pub fn khz_to_rad(f_khz: f64) -> f64 {
    TAU * f_khz * 1e3
}

pub fn ns(t: f64) -> f64 {
    t * 1e-9
}

pub fn to_ns(t: f64) -> f64 {
    t * 1e9
}

pub fn us(t: f64) -> f64 {
    t * 1e-6
}
