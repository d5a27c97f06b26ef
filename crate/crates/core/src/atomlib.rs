//! Species constants, two-photon wavevectors, the sensitivity factor χ and
//! 1-D thermal velocity statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::TWO_PI;

pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_07e-27;
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Species {
    Rb87,
    Cs133,
}

impl Species {
    pub fn mass_u(self) -> f64 {
        match self {
            Species::Rb87 => 86.909_183_5,
            Species::Cs133 => 132.905_451_9,
        }
    }

    /// Mass in kg.
    pub fn mass(self) -> f64 {
        self.mass_u() * ATOMIC_MASS_UNIT
    }

    pub fn name(self) -> &'static str {
        match self {
            Species::Rb87 => "Rb87",
            Species::Cs133 => "Cs133",
        }
    }
}

/// Signed effective wavevectors along the beam axis, μm⁻¹.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavevectorSpec {
    pub k_r: f64,
    pub k_a: f64,
}

impl WavevectorSpec {
    /// Ladder excitation with a counter-propagating dressing beam of
    /// wavelength `lambda_a`.
    pub fn from_wavelengths(lambda_up: f64, lambda_lower: f64, lambda_a: f64) -> Result<Self> {
        Ok(Self { k_r: two_photon_k(lambda_up, lambda_lower)?, k_a: -single_photon_k(lambda_a)? })
    }

    pub fn chi(&self) -> Result<f64> {
        sensitivity_chi(self)
    }
}

/// `2π/λ` in μm⁻¹ for λ in nm.
pub fn single_photon_k(lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) {
        return Err(Error::NonPositiveWavelength(lambda_nm));
    }
    Ok(TWO_PI / (lambda_nm * 1e-3))
}

/// `2π(1/λ_up − 1/λ_lower)` in μm⁻¹ for wavelengths in nm.
pub fn two_photon_k(lambda_up: f64, lambda_lower: f64) -> Result<f64> {
    Ok(single_photon_k(lambda_up)? - single_photon_k(lambda_lower)?)
}

/// `χ = |1 + k_a/k_r|`
pub fn sensitivity_chi(k: &WavevectorSpec) -> Result<f64> {
    if k.k_r == 0.0 {
        return Err(Error::ZeroReferenceWavevector);
    }
    Ok((1.0 + k.k_a / k.k_r).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalModel {
    /// Kelvin.
    pub temperature: f64,
    pub species: Species,
}

impl ThermalModel {
    pub fn new(temperature: f64, species: Species) -> Result<Self> {
        if !(temperature >= 0.0) {
            return Err(Error::InvalidParameter(format!("temperature {temperature} K")));
        }
        Ok(Self { temperature, species })
    }

    pub fn v_rms(&self) -> f64 {
        v_rms(self)
    }
}

/// `√(k_B T / m)` in m/s.
pub fn v_rms(model: &ThermalModel) -> f64 {
    (BOLTZMANN * model.temperature.max(0.0) / model.species.mass()).sqrt()
}

/// `k·v` in rad/μs for `k` in μm⁻¹ and `v` in m/s (the 10⁶ factors cancel).
pub fn doppler_shift(k: f64, v: f64) -> f64 {
    k * v
}

/// One column of the intermediate-state comparison table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionCase {
    pub label: &'static str,
    pub species: Species,
    pub lambda_up: f64,
    pub lambda_lower: f64,
    pub lambda_a: f64,
    /// Lifetime of the auxiliary state, μs.
    pub tau_a: f64,
    /// Tabulated k_r (μm⁻¹) and χ.
    pub k_r: f64,
    pub chi: f64,
}

impl TransitionCase {
    pub fn wavevectors(&self) -> WavevectorSpec {
        WavevectorSpec::from_wavelengths(self.lambda_up, self.lambda_lower, self.lambda_a)
            .expect("built-in wavelengths are positive")
    }
}

pub const TRANSITION_CASES: [TransitionCase; 8] = [
    TransitionCase { label: "a", species: Species::Rb87, lambda_up: 475.0, lambda_lower: 795.0, lambda_a: 475.0, tau_a: 0.158, k_r: 5.324, chi: 1.484 },
    TransitionCase { label: "b", species: Species::Rb87, lambda_up: 475.0, lambda_lower: 795.0, lambda_a: 480.0, tau_a: 0.150, k_r: 5.324, chi: 1.458 },
    TransitionCase { label: "c", species: Species::Rb87, lambda_up: 480.0, lambda_lower: 780.0, lambda_a: 475.0, tau_a: 0.158, k_r: 5.035, chi: 1.627 },
    TransitionCase { label: "d", species: Species::Rb87, lambda_up: 480.0, lambda_lower: 780.0, lambda_a: 480.0, tau_a: 0.150, k_r: 5.035, chi: 1.6 },
    TransitionCase { label: "e", species: Species::Cs133, lambda_up: 495.0, lambda_lower: 895.0, lambda_a: 495.0, tau_a: 0.200, k_r: 5.673, chi: 1.238 },
    TransitionCase { label: "f", species: Species::Cs133, lambda_up: 495.0, lambda_lower: 895.0, lambda_a: 509.0, tau_a: 0.174, k_r: 5.673, chi: 1.176 },
    TransitionCase { label: "g", species: Species::Cs133, lambda_up: 509.0, lambda_lower: 852.0, lambda_a: 495.0, tau_a: 0.200, k_r: 4.969, chi: 1.554 },
    TransitionCase { label: "h", species: Species::Cs133, lambda_up: 509.0, lambda_lower: 852.0, lambda_a: 509.0, tau_a: 0.174, k_r: 4.969, chi: 1.484 },
];

/// Default excitation path (480 nm + 780 nm, Rb87), μm⁻¹.
pub fn default_k_r() -> f64 {
    two_photon_k(480.0, 780.0).expect("positive wavelengths")
}

/// Dressing wavevector of the ground-state scheme, `−2π/0.297 μm`.
pub fn ground_dressing_k_a() -> f64 {
    -TWO_PI / 0.297
}

/// χ quoted for the ground-state scheme.
pub const GROUND_CHI_QUOTED: f64 = 4.202;

/// χ that follows from `|1 + k_a/k_r|` with the ground-state dressing beam.
pub fn ground_chi_from_wavevectors() -> f64 {
    sensitivity_chi(&WavevectorSpec { k_r: default_k_r(), k_a: ground_dressing_k_a() }).expect("k_r is nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn two_photon_k_examples() {
        assert_abs_diff_eq!(two_photon_k(480.0, 780.0).unwrap(), 5.035, epsilon = 5e-4);
        assert_abs_diff_eq!(two_photon_k(475.0, 795.0).unwrap(), 5.324, epsilon = 5e-4);
        assert_eq!(two_photon_k(780.0, 780.0).unwrap(), 0.0);
        assert!(matches!(two_photon_k(0.0, 780.0), Err(Error::NonPositiveWavelength(_))));
        assert!(matches!(two_photon_k(480.0, -1.0), Err(Error::NonPositiveWavelength(_))));
    }

    #[test]
    fn chi_examples() {
        let c = sensitivity_chi(&WavevectorSpec { k_r: 5.035, k_a: -13.228 }).unwrap();
        assert_abs_diff_eq!(c, 1.627, epsilon = 5e-4);
        let g = sensitivity_chi(&WavevectorSpec { k_r: 4.969, k_a: -12.693 }).unwrap();
        assert_abs_diff_eq!(g, 1.554, epsilon = 5e-4);
        assert_eq!(sensitivity_chi(&WavevectorSpec { k_r: 3.3, k_a: -3.3 }).unwrap(), 0.0);
        assert!(matches!(
            sensitivity_chi(&WavevectorSpec { k_r: 0.0, k_a: 1.0 }),
            Err(Error::ZeroReferenceWavevector)
        ));
    }

    #[test]
    fn table_columns_reproduce() {
        for case in &TRANSITION_CASES {
            let k = case.wavevectors();
            assert!(k.k_r > 0.0 && k.k_a < 0.0);
            assert_abs_diff_eq!(k.k_r, case.k_r, epsilon = 1e-3);
            assert_abs_diff_eq!(k.chi().unwrap(), case.chi, epsilon = 0.005);
        }
    }

    #[test]
    fn ground_chi_both_values() {
        assert_abs_diff_eq!(ground_dressing_k_a(), -21.156, epsilon = 1e-3);
        assert_abs_diff_eq!(ground_chi_from_wavevectors(), 3.202, epsilon = 1e-3);
        assert_abs_diff_eq!(ground_chi_from_wavevectors() + 1.0, GROUND_CHI_QUOTED, epsilon = 1e-3);
    }

    #[test]
    fn thermal_velocity() {
        let cold = ThermalModel::new(0.0, Species::Rb87).unwrap();
        assert_eq!(cold.v_rms(), 0.0);
        let hot = ThermalModel::new(5e-3, Species::Rb87).unwrap();
        assert_abs_diff_eq!(hot.v_rms(), 0.6916, epsilon = 1e-4);
        let mk = ThermalModel::new(50e-6, Species::Rb87).unwrap();
        assert_abs_diff_eq!(mk.v_rms(), 0.06916, epsilon = 1e-5);
        assert!(ThermalModel::new(-1.0, Species::Rb87).is_err());
    }

    #[test]
    fn doppler_examples() {
        let d = doppler_shift(5.035, 0.6916);
        assert_abs_diff_eq!(d, 3.482, epsilon = 1e-3);
        assert_abs_diff_eq!(d / TWO_PI, 0.554, epsilon = 1e-3);
        assert_eq!(doppler_shift(5.035, 0.0), 0.0);
        assert_eq!(doppler_shift(-5.035, 0.6916), -d);
    }

    proptest! {
        #[test]
        fn v_rms_scales_as_sqrt_t(t in 1e-7f64..1e-1, s in 1.01f64..100.0) {
            let a = ThermalModel::new(t, Species::Cs133).unwrap().v_rms();
            let b = ThermalModel::new(t * s, Species::Cs133).unwrap().v_rms();
            prop_assert!((b / a / s.sqrt() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn doppler_bilinear(k in -30.0f64..30.0, v1 in -2.0f64..2.0, v2 in -2.0f64..2.0, a in -3.0f64..3.0) {
            let lhs = doppler_shift(k, a * v1 + v2);
            let rhs = a * doppler_shift(k, v1) + doppler_shift(k, v2);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
            prop_assert!((doppler_shift(a * k, v1) - a * doppler_shift(k, v1)).abs() < 1e-12);
        }
    }
}
