//! Fixed CODATA-2018 values shared by every module.

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Coulomb constant 1/(4 pi eps0), N m^2 / C^2.
pub const COULOMB_K: f64 = 1.0 / (4.0 * std::f64::consts::PI * EPSILON_0);

/// One electron-volt in joules.
pub const ELECTRON_VOLT: f64 = ELEMENTARY_CHARGE;

/// Converts a frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_rad(f_mhz: f64) -> f64 {
    std::f64::consts::TAU * f_mhz * 1e6
}

/// Converts angular frequency in rad/s to MHz.
pub fn rad_to_mhz(omega: f64) -> f64 {
    omega / std::f64::consts::TAU * 1e-6
}

/// Immutable bundle of the constants, for callers that want them as a value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub epsilon_0: f64,
    pub elementary_charge: f64,
    pub atomic_mass_unit: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        epsilon_0: EPSILON_0,
        elementary_charge: ELEMENTARY_CHARGE,
        atomic_mass_unit: ATOMIC_MASS_UNIT,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}
