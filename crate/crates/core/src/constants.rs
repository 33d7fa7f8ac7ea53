//! CODATA 2018 physical constants in SI units.
//!
//! The 2019 SI redefinition fixes `h`, `k_B` and `e` exactly; `mu_0` and
//! `eps_0` are measured quantities.

use std::f64::consts::PI;

/// Planck constant (J s), exact.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Boltzmann constant (J/K), exact.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Vacuum permeability (N/A^2).
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity (F/m).
pub const EPS_0: f64 = 8.854_187_812_8e-12;
/// One electronvolt in joules, exact.
pub const ELECTRONVOLT: f64 = 1.602_176_634e-19;
/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Bundle of the constants above, for callers that want to pass them around
/// as a value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub h: f64,
    pub hbar: f64,
    pub k_b: f64,
    pub mu_0: f64,
    pub eps_0: f64,
    pub ev: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        h: PLANCK,
        hbar: HBAR,
        k_b: BOLTZMANN,
        mu_0: MU_0,
        eps_0: EPS_0,
        ev: ELECTRONVOLT,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}
