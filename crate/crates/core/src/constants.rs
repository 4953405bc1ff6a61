//! Physical constants (CODATA 2018, SI).

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Planck constant h = 2πħ, J·s. Converts energies held in Hz to joules.
pub const PLANCK: f64 = 2.0 * PI * HBAR;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Density of diamond, kg/m³.
pub const DIAMOND_DENSITY: f64 = 3515.0;

/// One gauss in tesla.
pub const GAUSS: f64 = 1e-4;
