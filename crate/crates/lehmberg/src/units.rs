//! Physical constants and unit conversions.
//!
//! Rates are in 10⁶ s⁻¹, so the natural time unit of the generator is 1 µs.
//! Public APIs take times in ns and convert with [`NS_PER_RATE_TIME`].

use std::f64::consts::PI;

/// Speed of light in nm · 10⁶ s⁻¹.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e11;
/// Nanoseconds per unit of generator time (1 / 10⁶ s⁻¹).
pub const NS_PER_RATE_TIME: f64 = 1.0e3;

pub mod si {
    pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
    pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
    pub const HBAR: f64 = 1.054_571_817e-34;
}

/// Wave number 2π/λ in nm⁻¹.
pub fn wavenumber(wavelength_nm: f64) -> f64 {
    2.0 * PI / wavelength_nm
}

/// Angular transition frequency c·κ in 10⁶ rad/s.
pub fn angular_frequency(wavelength_nm: f64) -> f64 {
    SPEED_OF_LIGHT * wavenumber(wavelength_nm)
}

pub fn ns_to_rate_time(t_ns: f64) -> f64 {
    t_ns / NS_PER_RATE_TIME
}

pub fn rate_time_to_ns(t: f64) -> f64 {
    t * NS_PER_RATE_TIME
}
