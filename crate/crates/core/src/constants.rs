//! CODATA 2018 constants in SI units.

use std::f64::consts::PI;

pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// One debye in C·m.
pub const DEBYE: f64 = 3.335_640_95e-30;

/// Relative permittivity of high-resistivity silicon.
pub const SILICON_PERMITTIVITY: f64 = 11.45;
