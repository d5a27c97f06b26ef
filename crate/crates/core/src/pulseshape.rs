//! Drive envelopes: Gaussian Rabi amplitudes, polynomial-plus-harmonic phase
//! profiles and the constant two-tone dressing field.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the gate window so RK4 stage times that land on `T_g` through
/// round-off are accepted.
const WINDOW_SLACK: f64 = 1e-9;

fn check_window(t: f64, t_gate: f64) -> Result<()> {
    if t < -WINDOW_SLACK || t > t_gate + WINDOW_SLACK || !t.is_finite() {
        return Err(Error::OutOfWindow { t, t_gate });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianAmplitude {
    /// Peak Rabi frequency, rad/μs.
    pub omega_max: f64,
    /// Standard deviation, μs.
    pub width: f64,
    pub t_gate: f64,
}

impl GaussianAmplitude {
    pub fn new(omega_max: f64, width: f64, t_gate: f64) -> Result<Self> {
        if !(omega_max >= 0.0) || !(width > 0.0) || !(t_gate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian amplitude needs omega_max >= 0, width > 0, t_gate > 0 (got {omega_max}, {width}, {t_gate})"
            )));
        }
        Ok(Self { omega_max, width, t_gate })
    }

    #[inline]
    pub(crate) fn eval(&self, t: f64) -> f64 {
        let x = (t - 0.5 * self.t_gate) / self.width;
        self.omega_max * (-0.5 * x * x).exp()
    }
}

/// `Ω_max·exp(−(t−T_g/2)²/(2ω²))`
pub fn amplitude_at(a: &GaussianAmplitude, t: f64) -> Result<f64> {
    check_window(t, a.t_gate)?;
    Ok(a.eval(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Linear,
    Composite,
    Generalized,
}

/// `φ(t) = δ₀t + δ₁ sin(4πt/T_g) + δ₂ cos(απt/T_g)`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseProfile {
    pub kind: PhaseKind,
    /// rad/μs
    pub delta0: f64,
    /// rad
    pub delta1: f64,
    /// rad
    pub delta2: f64,
    pub alpha: f64,
}

impl PhaseProfile {
    pub fn linear(delta0: f64) -> Self {
        Self { kind: PhaseKind::Linear, delta0, delta1: 0.0, delta2: 0.0, alpha: 2.0 }
    }

    pub fn composite(delta0: f64, delta1: f64, delta2: f64) -> Self {
        Self { kind: PhaseKind::Composite, delta0, delta1, delta2, alpha: 2.0 }
    }

    pub fn generalized(delta0: f64, delta1: f64, delta2: f64, alpha: f64) -> Self {
        Self { kind: PhaseKind::Generalized, delta0, delta1, delta2, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PhaseKind::Linear if self.delta1 != 0.0 || self.delta2 != 0.0 => {
                Err(Error::InvalidParameter("linear phase profile carries harmonic terms".into()))
            }
            PhaseKind::Composite if self.alpha != 2.0 => {
                Err(Error::InvalidParameter(format!("composite phase profile needs alpha = 2, got {}", self.alpha)))
            }
            _ if ![self.delta0, self.delta1, self.delta2, self.alpha].iter().all(|x| x.is_finite()) => {
                Err(Error::InvalidParameter("non-finite phase coefficient".into()))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub(crate) fn eval(&self, t: f64, t_gate: f64) -> f64 {
        let mut phi = self.delta0 * t;
        if self.kind != PhaseKind::Linear {
            phi += self.delta1 * (4.0 * PI * t / t_gate).sin() + self.delta2 * (self.alpha * PI * t / t_gate).cos();
        }
        phi
    }
}

pub fn phase_at(p: &PhaseProfile, t: f64, t_gate: f64) -> Result<f64> {
    check_window(t, t_gate)?;
    Ok(p.eval(t, t_gate))
}

/// Two dressing tones of Rabi frequency `omega_d` at detunings `±delta_d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressingConfig {
    /// rad/μs
    pub omega_d: f64,
    /// rad/μs
    pub delta_d: f64,
    pub enabled: bool,
}

impl DressingConfig {
    pub fn off() -> Self {
        Self { omega_d: 0.0, delta_d: 0.0, enabled: false }
    }

    pub fn new(omega_d: f64, delta_d: f64) -> Result<Self> {
        let d = Self { omega_d, delta_d, enabled: true };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_d >= 0.0) {
            return Err(Error::InvalidParameter(format!("omega_d = {}", self.omega_d)));
        }
        if self.enabled && !(self.delta_d > 0.0) {
            return Err(Error::InvalidParameter(format!("enabled dressing needs delta_d > 0, got {}", self.delta_d)));
        }
        Ok(())
    }

    /// Coefficient of `|r⟩⟨a| + h.c.`: `(Ω_d/2)(e^{iΔ_d t} + e^{−iΔ_d t})`.
    #[inline]
    pub fn coupling_at(&self, t: f64) -> f64 {
        if self.enabled {
            self.omega_d * (self.delta_d * t).cos()
        } else {
            0.0
        }
    }

    /// `Ω_d/Δ_d`
    pub fn ratio(&self) -> f64 {
        self.omega_d / self.delta_d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Beam {
    /// `Ω_r`, drives `|1⟩ ↔ |r⟩` on both atoms.
    R,
    /// `Ω′_r`, drives `|0⟩ ↔ |r⟩` on the target.
    RPrime,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSet {
    pub amp_r: GaussianAmplitude,
    pub amp_rp: GaussianAmplitude,
    /// Shared by both beams.
    pub phase: PhaseProfile,
    pub dressing: DressingConfig,
    pub t_gate: f64,
}

impl PulseSet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        t_gate: f64,
        omega_max: f64,
        width: f64,
        omega_max_p: f64,
        width_p: f64,
        phase: PhaseProfile,
        dressing: DressingConfig,
    ) -> Result<Self> {
        let p = Self {
            amp_r: GaussianAmplitude::new(omega_max, width, t_gate)?,
            amp_rp: GaussianAmplitude::new(omega_max_p, width_p, t_gate)?,
            phase,
            dressing,
            t_gate,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        GaussianAmplitude::new(self.amp_r.omega_max, self.amp_r.width, self.t_gate)?;
        GaussianAmplitude::new(self.amp_rp.omega_max, self.amp_rp.width, self.t_gate)?;
        if self.amp_r.t_gate != self.t_gate || self.amp_rp.t_gate != self.t_gate {
            return Err(Error::InvalidParameter("amplitude windows differ from t_gate".into()));
        }
        self.phase.validate()?;
        self.dressing.validate()
    }

    /// Returns a copy with `t_gate` replaced everywhere.
    pub fn with_t_gate(mut self, t_gate: f64) -> Self {
        self.t_gate = t_gate;
        self.amp_r.t_gate = t_gate;
        self.amp_rp.t_gate = t_gate;
        self
    }

    #[inline]
    pub(crate) fn rabi_unchecked(&self, which: Beam, t: f64) -> Complex64 {
        let a = match which {
            Beam::R => self.amp_r.eval(t),
            Beam::RPrime => self.amp_rp.eval(t),
        };
        Complex64::from_polar(a, self.phase.eval(t, self.t_gate))
    }
}

/// `|Ω(t)|·e^{iφ(t)}`
pub fn complex_rabi(pulses: &PulseSet, which: Beam, t: f64) -> Result<Complex64> {
    check_window(t, pulses.t_gate)?;
    Ok(pulses.rabi_unchecked(which, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mhz;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn with_c_amp() -> GaussianAmplitude {
        GaussianAmplitude::new(mhz(9.89), 0.1091, 3.6).unwrap()
    }

    #[test]
    fn amplitude_examples() {
        let a = with_c_amp();
        assert_abs_diff_eq!(amplitude_at(&a, 1.8).unwrap(), mhz(9.89), epsilon = 1e-12);
        assert_abs_diff_eq!(amplitude_at(&a, 1.8 + 0.1091).unwrap(), mhz(9.89) * (-0.5f64).exp(), epsilon = 1e-12);
        let z = GaussianAmplitude::new(0.0, 0.1, 1.0).unwrap();
        assert_eq!(amplitude_at(&z, 0.3).unwrap(), 0.0);
        assert!(matches!(amplitude_at(&a, 3.7), Err(Error::OutOfWindow { .. })));
        assert!(matches!(amplitude_at(&a, -0.1), Err(Error::OutOfWindow { .. })));
    }

    #[test]
    fn phase_examples() {
        let p = PhaseProfile::composite(mhz(-4.77), mhz(-0.57), mhz(-2.07));
        assert_abs_diff_eq!(phase_at(&p, 0.0, 3.6).unwrap(), mhz(-2.07), epsilon = 1e-12);
        assert_abs_diff_eq!(phase_at(&p, 3.6, 3.6).unwrap(), mhz(-4.77) * 3.6 + mhz(-2.07), epsilon = 1e-10);
        let lin = PhaseProfile::linear(mhz(4.90));
        assert_abs_diff_eq!(phase_at(&lin, 1.0, 1.0).unwrap(), mhz(4.90), epsilon = 1e-12);
    }

    #[test]
    fn phase_kind_constraints() {
        let mut p = PhaseProfile::linear(1.0);
        p.delta1 = 0.1;
        assert!(p.validate().is_err());
        let mut c = PhaseProfile::composite(1.0, 0.0, 0.0);
        c.alpha = 1.5;
        assert!(c.validate().is_err());
        assert!(PhaseProfile::generalized(1.0, 2.0, 3.0, 1.288).validate().is_ok());
    }

    #[test]
    fn dressing_constraints() {
        assert!(DressingConfig::new(mhz(200.0), 0.0).is_err());
        assert!(DressingConfig::new(-1.0, 1.0).is_err());
        assert!(DressingConfig::off().validate().is_ok());
        let d = DressingConfig::new(2.0, 3.0).unwrap();
        assert_abs_diff_eq!(d.coupling_at(0.0), 2.0);
        assert_eq!(DressingConfig::off().coupling_at(0.4), 0.0);
    }

    #[test]
    fn complex_rabi_examples() {
        let amp = GaussianAmplitude::new(1.0, 1e9, 2.0).unwrap();
        let zero_phase = PulseSet {
            amp_r: amp,
            amp_rp: amp,
            phase: PhaseProfile::linear(0.0),
            dressing: DressingConfig::off(),
            t_gate: 2.0,
        };
        for k in 0..=10 {
            let z = complex_rabi(&zero_phase, Beam::R, 0.2 * k as f64).unwrap();
            assert_eq!(z.im, 0.0);
        }
        let rotating = PulseSet { phase: PhaseProfile::linear(3.0), ..zero_phase };
        let z = complex_rabi(&rotating, Beam::RPrime, 0.7).unwrap();
        assert!((z - Complex64::from_polar(1.0, 2.1)).norm() < 1e-12);

        let p = PulseSet::new(
            3.6,
            mhz(9.89),
            0.1091,
            mhz(9.95),
            0.1093,
            PhaseProfile::composite(mhz(-4.77), mhz(-0.57), mhz(-2.07)),
            DressingConfig::new(mhz(201.4), mhz(288.5)).unwrap(),
        )
        .unwrap();
        let z = complex_rabi(&p, Beam::R, 1.8).unwrap();
        assert_abs_diff_eq!(z.norm(), mhz(9.89), epsilon = 1e-10);
        let phi = phase_at(&p.phase, 1.8, 3.6).unwrap();
        assert!((z - Complex64::from_polar(mhz(9.89), phi)).norm() < 1e-10);
    }

    proptest! {
        #[test]
        fn amplitude_symmetric(tg in 0.1f64..5.0, w in 0.02f64..1.0, om in 0.0f64..130.0, u in 0.0f64..1.0) {
            let a = GaussianAmplitude::new(om, w, tg).unwrap();
            let t = u * tg;
            prop_assert!((amplitude_at(&a, t).unwrap() - amplitude_at(&a, tg - t).unwrap()).abs() <= 1e-12 * (1.0 + om));
        }

        #[test]
        fn linear_phase_rate(d0 in -130.0f64..130.0, u in 0.01f64..0.99) {
            let tg = 2.0;
            let p = PhaseProfile::linear(d0);
            let t = u * tg;
            let h = 1e-4;
            let fd = (phase_at(&p, t + h, tg).unwrap() - phase_at(&p, t - h, tg).unwrap()) / (2.0 * h);
            prop_assert!((fd - d0).abs() <= 1e-6 * d0.abs().max(1.0));
        }

        #[test]
        fn generalized_alpha_two_is_composite(d0 in -100.0f64..100.0, d1 in -100.0f64..100.0, d2 in -100.0f64..100.0, tg in 0.1f64..5.0) {
            let c = PhaseProfile::composite(d0, d1, d2);
            let g = PhaseProfile::generalized(d0, d1, d2, 2.0);
            for k in 0..1000 {
                let t = tg * k as f64 / 999.0;
                prop_assert_eq!(phase_at(&c, t, tg).unwrap(), phase_at(&g, t, tg).unwrap());
            }
        }
    }
}
