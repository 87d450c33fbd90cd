//! Physical constants and ⁸⁷Rb data.

use std::f64::consts::PI;

/// Bumped whenever any value in this file changes; written into CSV headers.
pub const CONSTANTS_VERSION: &str = "rbxe-constants-1";

/// Boltzmann constant, J/K (SI exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Atomic mass unit, kg (CODATA 2018).
pub const AMU: f64 = 1.660_539_066_60e-27;
/// 1 Torr in Pa (101325/760).
pub const TORR: f64 = 101_325.0 / 760.0;
pub const CELSIUS_OFFSET: f64 = 273.15;

/// ⁸⁷Rb atomic mass (AME 2016).
pub const MASS_RB87: f64 = 86.909_180_527 * AMU;
/// N₂ molecular mass (standard atomic weights).
pub const MASS_N2: f64 = 28.0134 * AMU;
/// ¹²⁹Xe atomic mass (AME 2016).
pub const MASS_XE129: f64 = 128.904_780_861_1 * AMU;

/// ⁸⁷Rb ground-state hyperfine splitting, rad/s (Bize et al. 1999).
pub const OMEGA_HF_RB87: f64 = 2.0 * PI * 6.834_682_610_904e9;
/// Free-electron gyromagnetic ratio |γe|, rad/(s·T) (CODATA 2018).
pub const GAMMA_ELECTRON: f64 = 2.0 * PI * 28.024_951_4e9;
/// ⁸⁷Rb nuclear gyromagnetic ratio magnitude, rad/(s·T) (Arimondo et al. 1977).
pub const GAMMA_NUCLEAR_RB87: f64 = 2.0 * PI * 13.9842e6;

pub const DEFAULT_FILL_TEMPERATURE: f64 = 293.15;

pub fn hz_to_angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

pub fn angular_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

pub fn celsius_to_kelvin(c: f64) -> f64 {
    c + CELSIUS_OFFSET
}
