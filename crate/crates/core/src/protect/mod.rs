//! Dressing-field protection of a Rydberg level: first-order Magnus
//! analysis, the Bessel condition and the single-atom transfer benchmark.

pub mod bessel;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{evolve_model, IntegratorSpec, Trajectory};
use crate::protocol::{CompiledModel, Coupling, Drive, DriveValues, Source};
use crate::pulseshape::DressingConfig;
use crate::qmat::{ComplexMatrix, DensityMatrix, C64, ONE, ZERO};

pub use bessel::{j0, j1, J1_FIRST_ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedPair {
    pub chi: f64,
    pub omega_d: f64,
    pub delta_d: f64,
}

impl DressedPair {
    pub fn z1(&self) -> Result<f64> {
        if self.delta_d == 0.0 {
            return Err(Error::InvalidParameter("delta_d = 0".into()));
        }
        Ok(self.omega_d / self.delta_d)
    }
}

/// `(δ/2)[(χ−1)I + 2J₀(z₁)(χ+1)(S₊e^{−z₁} + S₋e^{z₁})]` on `{|r⟩, |a⟩}`.
pub fn magnus_first_order(pair: &DressedPair, delta: f64) -> Result<ComplexMatrix> {
    let z = pair.z1()?;
    let c = 0.5 * delta;
    let diag = c * (pair.chi - 1.0);
    let off = c * 2.0 * j0(z) * (pair.chi + 1.0);
    ComplexMatrix::from_real(2, 2, &[diag, off * (-z).exp(), off * z.exp(), diag])
}

/// Smallest positive `z` with `J₀(z) = (χ−1)/(2(χ+1))`.
pub fn bessel_ratio(chi: f64) -> Result<f64> {
    if !(chi >= 0.0) {
        return Err(Error::InvalidParameter(format!("chi = {chi}")));
    }
    let target = if chi.is_infinite() { 0.5 } else { (chi - 1.0) / (2.0 * (chi + 1.0)) };
    bessel_root(target)
}

/// Smallest positive root of `J₀(z) = target` on `(0, j₁,₁]`.
pub fn bessel_root(target: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, J1_FIRST_ZERO);
    if !(target < 1.0 && target >= j0(hi)) {
        return Err(Error::NoRoot(target));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if j0(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    /// Constant Rabi frequency on `|1⟩ ↔ |r⟩`, rad/μs.
    pub omega_r: f64,
    /// When set, `Ω_r τ` must equal `2nπ`.
    pub n: Option<u32>,
    /// μs
    pub tau: f64,
    pub dressing: DressingConfig,
    pub chi: f64,
}

impl TransferConfig {
    pub fn validate(&self) -> Result<()> {
        self.dressing.validate()?;
        if !(self.tau > 0.0) || !(self.omega_r >= 0.0) {
            return Err(Error::InvalidParameter(format!("transfer needs tau > 0 and omega_r >= 0 ({self:?})")));
        }
        if let Some(n) = self.n {
            let want = std::f64::consts::TAU * n as f64;
            if (self.omega_r * self.tau - want).abs() > 1e-9 * want.max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "pulse area {} is not 2*{n}*pi",
                    self.omega_r * self.tau
                )));
            }
        }
        Ok(())
    }
}

struct ConstDrive {
    omega_r: f64,
    dressing: DressingConfig,
}

impl Drive for ConstDrive {
    fn at(&self, t: f64) -> DriveValues {
        DriveValues { rabi_r: C64::new(self.omega_r, 0.0), rabi_rp: ZERO, dressing: self.dressing.coupling_at(t) }
    }
}

/// Single-atom `{|1⟩, |r⟩, |a⟩}` model with shifts `−δ` on `r` and `χδ` on `a`.
fn transfer_model(t: &TransferConfig, delta: f64) -> CompiledModel {
    let mut couplings =
        vec![Coupling { row: 0, col: 1, source: Source::RabiR, conj: false, scale: C64::new(0.5, 0.0) }];
    let mut diag = vec![0.0, -delta, 0.0];
    if t.dressing.enabled {
        couplings.push(Coupling { row: 1, col: 2, source: Source::Dressing, conj: false, scale: ONE });
        diag[2] = t.chi * delta;
    }
    CompiledModel { atom_dims: vec![3], labels: vec!["1", "r", "a"], diag, couplings, jumps: vec![] }
}

/// Full trajectory of the transfer benchmark, starting in `|1⟩`.
pub fn transfer_trajectory(t: &TransferConfig, delta: f64, spec: &IntegratorSpec) -> Result<Trajectory> {
    t.validate()?;
    let d = &t.dressing;
    let dressing_delta = d.enabled.then_some(d.delta_d);
    let fastest = if d.enabled { d.delta_d + d.omega_d } else { 0.0 };
    let plan = spec.plan(t.tau, dressing_delta, fastest)?;
    let drive = ConstDrive { omega_r: t.omega_r, dressing: *d };
    evolve_model(&transfer_model(t, delta), &drive, &DensityMatrix::basis(3, 0), t.tau, plan)
}

/// `1 − ⟨1|ρ(τ)|1⟩` after driving from `|1⟩` for `τ` with no decay.
pub fn transfer_demo(t: &TransferConfig, delta: f64, spec: &IntegratorSpec) -> Result<f64> {
    Ok(1.0 - transfer_trajectory(t, delta, spec)?.final_state.population(0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub best_ratio: f64,
    /// `(Ω_d/Δ_d, max_δ |F(δ) − F(0)|)` for every grid ratio.
    pub curve: Vec<(f64, f64)>,
}

/// For each ratio sets `Δ_d = Ω_d/ratio`, runs the transfer over
/// `delta_grid` and scores the spread of the fidelity about `δ = 0`.
pub fn insensitive_scan(
    chi: f64,
    omega_d: f64,
    ratio_grid: &[f64],
    delta_grid: &[f64],
    probe: &TransferConfig,
    spec: &IntegratorSpec,
) -> Result<ScanResult> {
    if ratio_grid.is_empty() || delta_grid.is_empty() {
        return Err(Error::InvalidParameter("empty scan grid".into()));
    }
    let curve: Vec<(f64, f64)> = ratio_grid
        .par_iter()
        .map(|&r| {
            let mut cfg = *probe;
            cfg.chi = chi;
            if probe.dressing.enabled {
                cfg.dressing = DressingConfig::new(omega_d, omega_d / r)?;
            }
            let f0 = 1.0 - transfer_demo(&cfg, 0.0, spec)?;
            let mut score = 0.0f64;
            for &d in delta_grid {
                let f = 1.0 - transfer_demo(&cfg, d, spec)?;
                score = score.max((f - f0).abs());
            }
            Ok((r, score))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = curve.iter().copied().fold((f64::NAN, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    Ok(ScanResult { best_ratio: best.0, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mhz;
    use approx::assert_abs_diff_eq;

    fn pair(chi: f64, z: f64) -> DressedPair {
        DressedPair { chi, omega_d: z * 10.0, delta_d: 10.0 }
    }

    #[test]
    fn magnus_examples() {
        assert_eq!(magnus_first_order(&pair(1.6, 0.7), 0.0).unwrap().max_abs(), 0.0);
        let m = magnus_first_order(&pair(1.0, 2.404_825_557_695_773), 1.3).unwrap();
        assert!(m.max_abs() <= 1e-6 * 1.3);
        // χ = 1, z = 0: (δ/2)·2·J₀(0)·(χ+1)·σx
        let m = magnus_first_order(&pair(1.0, 0.0), 0.8).unwrap();
        let e = m.herm_eig().unwrap();
        assert_abs_diff_eq!(e.values[0], -1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(e.values[1], 1.6, epsilon = 1e-12);
    }

    #[test]
    fn magnus_linear_in_delta() {
        let p = pair(1.627, 0.698);
        let a = magnus_first_order(&p, 0.37).unwrap();
        let b = magnus_first_order(&p, 1.11).unwrap();
        assert!(a.scale(C64::new(3.0, 0.0)).max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn bessel_ratio_examples() {
        assert_abs_diff_eq!(bessel_ratio(1.0).unwrap(), 2.404_825_557_695_773, epsilon = 1e-8);
        assert!((bessel_ratio(1.0).unwrap() / (85.0 / 35.0) - 1.0).abs() < 0.02);
        assert_abs_diff_eq!(bessel_ratio(f64::INFINITY).unwrap(), 1.5211, epsilon = 1e-4);
        // χ = 0 asks for J₀ = −1/2, below the first minimum
        assert!(matches!(bessel_ratio(0.0), Err(Error::NoRoot(_))));
        let z = bessel_root(-0.25).unwrap();
        assert_abs_diff_eq!(z, 2.970_819_636_303_319, epsilon = 1e-9);
        assert_abs_diff_eq!(j0(z), -0.25, epsilon = 1e-10);
        assert!(matches!(bessel_root(-0.5), Err(Error::NoRoot(_))));
        assert!(matches!(bessel_root(1.0), Err(Error::NoRoot(_))));
    }

    fn nodress() -> TransferConfig {
        TransferConfig { omega_r: mhz(1.0), n: Some(1), tau: 1.0, dressing: DressingConfig::off(), chi: 1.0 }
    }

    #[test]
    fn transfer_full_return() {
        assert!(transfer_demo(&nodress(), 0.0, &IntegratorSpec::default()).unwrap() <= 1e-8);
    }

    #[test]
    fn transfer_no_dressing_even_in_delta() {
        let spec = IntegratorSpec::default();
        for d in [0.3, 1.7, 5.0] {
            let a = transfer_demo(&nodress(), d, &spec).unwrap();
            let b = transfer_demo(&nodress(), -d, &spec).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn transfer_rejects_wrong_area() {
        let t = TransferConfig { omega_r: mhz(1.1), ..nodress() };
        assert!(t.validate().is_err());
    }

    #[test]
    fn scan_without_dressing_is_flat() {
        let deltas = [mhz(-0.5), mhz(0.5)];
        let r = insensitive_scan(1.627, mhz(200.0), &[0.5, 0.7, 0.9], &deltas, &nodress(), &IntegratorSpec::default()).unwrap();
        let s0 = r.curve[0].1;
        assert!(s0 > 0.1);
        assert!(r.curve.iter().all(|c| (c.1 - s0).abs() < 1e-12));
    }
}
