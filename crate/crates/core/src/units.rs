//! Physical constants (CODATA 2018) and unit conversions used at reporting
//! boundaries. Everything inside the library is SI.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Dipole moment of one atomic unit, e * a0, in C m.
pub const AU_DIPOLE: f64 = ELEMENTARY_CHARGE * BOHR_RADIUS;

/// Vacuum wavelength (m) of an angular frequency.
pub fn angular_to_wavelength(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / omega
}

pub fn wavelength_to_angular(lambda: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lambda
}

pub fn joule_to_microkelvin(u: f64) -> f64 {
    u / BOLTZMANN * 1e6
}

pub fn newton_to_zeptonewton(f: f64) -> f64 {
    f * 1e21
}

pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI) * 1e-6
}
