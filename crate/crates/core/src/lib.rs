//! Simulation and pulse optimization for Doppler-robust Rydberg CNOT gates.
//!
//! Units: time in μs, angular frequencies in rad/μs, wavevectors in μm⁻¹,
//! velocities in m/s, temperatures in K.

pub mod atomlib;
pub mod config;
pub mod dopplermc;
pub mod error;
pub mod evolve;
pub mod gaopt;
pub mod gatemetrics;
pub mod protect;
pub mod protocol;
pub mod pulseshape;
pub mod qmat;
pub mod scenarios;

pub use error::{Error, Result};

/// 2π, for MHz → rad/μs.
pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Angular frequency in rad/μs from a frequency in MHz.
pub fn mhz(f: f64) -> f64 {
    TWO_PI * f
}
