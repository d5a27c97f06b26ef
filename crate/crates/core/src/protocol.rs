//! Level schemes, Hamiltonians and jump operators for the three gate
//! protocols.
//!
//! Two routes are provided. [`hamiltonian_at`] and [`lindblad_ops`] assemble
//! dense operators literally from single-atom pieces and Kronecker products;
//! [`CompiledModel`] stores the same generator as sparse terms for the
//! integrator. Tests check that both agree.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulseshape::{Beam, PulseSet};
use crate::qmat::{kron, ComplexMatrix, C64, ONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// Plain blockade gate, levels `0, 1, r` plus an inert `a`.
    None,
    /// Rydberg level dressed by an intermediate excited state `a`.
    Excited,
    /// Förster pair `ss ↔ pp′` with `p` dressed by a ground state `a`.
    Ground,
}

impl ProtocolKind {
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            ProtocolKind::None | ProtocolKind::Excited => &["0", "1", "r", "a"],
            ProtocolKind::Ground => &["0", "1", "s", "p", "a"],
        }
    }

    pub fn atom_dim(self) -> usize {
        self.labels().len()
    }

    pub fn dim(self) -> usize {
        self.atom_dim() * self.atom_dim()
    }

    pub fn level(self, label: &str) -> Option<usize> {
        self.labels().iter().position(|&l| l == label)
    }

    /// The level addressed by the excitation lasers.
    pub fn rydberg(self) -> usize {
        2
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::None => "none",
            ProtocolKind::Excited => "excited",
            ProtocolKind::Ground => "ground",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "no-dressing" => Ok(ProtocolKind::None),
            "excited" => Ok(ProtocolKind::Excited),
            "ground" => Ok(ProtocolKind::Ground),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// Decay rates in μs⁻¹. `gamma_r`/`gamma_a` apply to the blockade protocols,
/// `gamma_s`/`gamma_p` to the Förster protocol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Decays {
    pub gamma_r: f64,
    pub gamma_a: f64,
    pub gamma_s: f64,
    pub gamma_p: f64,
}

impl Decays {
    pub const NONE: Decays = Decays { gamma_r: 0.0, gamma_a: 0.0, gamma_s: 0.0, gamma_p: 0.0 };

    /// `γ_r = 2.6 kHz`, `γ_a = 2π × 1 MHz`.
    pub fn excited_default() -> Self {
        Decays { gamma_r: 2.6e-3, gamma_a: crate::mhz(1.0), gamma_s: 0.0, gamma_p: 0.0 }
    }

    /// `γ_s = 2.6 kHz`, `γ_p = 1.3 kHz`.
    pub fn ground_default() -> Self {
        Decays { gamma_r: 0.0, gamma_a: 0.0, gamma_s: 2.6e-3, gamma_p: 1.3e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.gamma_r, self.gamma_a, self.gamma_s, self.gamma_p].iter().all(|g| *g >= 0.0 && g.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("negative decay rate in {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    /// Blockade shift or Förster coupling, rad/μs.
    pub v: f64,
    pub chi: f64,
    pub decays: Decays,
    pub pulses: PulseSet,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        self.pulses.validate()?;
        self.decays.validate()?;
        if self.kind == ProtocolKind::None && self.pulses.dressing.enabled {
            return Err(Error::InvalidParameter("no-dressing protocol with dressing enabled".into()));
        }
        if !self.v.is_finite() || !self.chi.is_finite() {
            return Err(Error::InvalidParameter("non-finite interaction or chi".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn with_decays(mut self, decays: Decays) -> Self {
        self.decays = decays;
        self
    }

    pub fn t_gate(&self) -> f64 {
        self.pulses.t_gate
    }
}

/// Per-realisation detuning errors in rad/μs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSample {
    pub delta_c: f64,
    pub delta_t: f64,
    pub delta_prime: f64,
}

impl NoiseSample {
    pub const ZERO: NoiseSample = NoiseSample { delta_c: 0.0, delta_t: 0.0, delta_prime: 0.0 };

    /// Same shift on both atoms.
    pub fn common(delta: f64) -> Self {
        NoiseSample { delta_c: delta, delta_t: delta, delta_prime: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Control,
    Target,
}

/// Where a coupling's time dependence comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Const,
    /// `Ω_r(t)`
    RabiR,
    /// `Ω′_r(t)`
    RabiRp,
    /// `Ω_d cos(Δ_d t)`
    Dressing,
}

/// Drive values at one instant, indexed by [`Source`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveValues {
    pub rabi_r: C64,
    pub rabi_rp: C64,
    pub dressing: f64,
}

impl DriveValues {
    #[inline]
    pub fn get(&self, s: Source) -> C64 {
        match s {
            Source::Const => ONE,
            Source::RabiR => self.rabi_r,
            Source::RabiRp => self.rabi_rp,
            Source::Dressing => C64::new(self.dressing, 0.0),
        }
    }
}

/// Anything that produces the drive values of a [`CompiledModel`].
pub trait Drive: Sync {
    fn at(&self, t: f64) -> DriveValues;
}

impl Drive for PulseSet {
    #[inline]
    fn at(&self, t: f64) -> DriveValues {
        DriveValues {
            rabi_r: self.rabi_unchecked(Beam::R, t),
            rabi_rp: self.rabi_unchecked(Beam::RPrime, t),
            dressing: self.dressing.coupling_at(t),
        }
    }
}

/// Upper-triangle entry `H[row, col] = scale · source(t)` (the lower entry is
/// its conjugate).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub row: usize,
    pub col: usize,
    pub source: Source,
    /// When set the upper entry carries the conjugate of the source.
    pub conj: bool,
    pub scale: C64,
}

/// A jump operator `Σ_m amp_m |row_m⟩⟨col_m|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jump {
    pub entries: Vec<(usize, usize, f64)>,
}

/// Sparse generator: diagonal energies, Hermitian couplings, jump operators,
/// plus the level labels of each atom for population bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledModel {
    pub atom_dims: Vec<usize>,
    pub labels: Vec<&'static str>,
    pub diag: Vec<f64>,
    pub couplings: Vec<Coupling>,
    pub jumps: Vec<Jump>,
}

impl CompiledModel {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Levels of each atom for basis index `k` (control first).
    pub fn decompose(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.atom_dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.atom_dims).rev() {
            *slot = k % d;
            k /= d;
        }
        out
    }

    /// Dense `H(t)` from the sparse description.
    pub fn dense_hamiltonian(&self, drive: &DriveValues) -> ComplexMatrix {
        let n = self.dim();
        let mut h = ComplexMatrix::zeros(n, n);
        for (k, &d) in self.diag.iter().enumerate() {
            h[(k, k)] = C64::new(d, 0.0);
        }
        for c in &self.couplings {
            let s = drive.get(c.source);
            let v = c.scale * if c.conj { s.conj() } else { s };
            h[(c.row, c.col)] += v;
            h[(c.col, c.row)] += v.conj();
        }
        h
    }

    pub fn dense_jumps(&self) -> Vec<ComplexMatrix> {
        let n = self.dim();
        self.jumps
            .iter()
            .map(|j| {
                let mut m = ComplexMatrix::zeros(n, n);
                for &(r, c, a) in &j.entries {
                    m[(r, c)] += C64::new(a, 0.0);
                }
                m
            })
            .collect()
    }
}

/// Single-atom pieces shared by both routes: diagonal, couplings (within one
/// atom, upper triangle) and jump list `(to, from, rate)`.
struct AtomPieces {
    diag: Vec<f64>,
    couplings: Vec<(usize, usize, Source, bool, f64)>,
    jumps: Vec<(usize, usize, f64)>,
}

fn atom_pieces(cfg: &ProtocolConfig, role: Role, delta: f64, delta_prime: f64) -> AtomPieces {
    let kind = cfg.kind;
    let d = kind.atom_dim();
    let mut diag = vec![0.0; d];
    let mut couplings = Vec::new();
    let mut jumps = Vec::new();
    let dressed = cfg.pulses.dressing.enabled && kind != ProtocolKind::None;
    let g = cfg.decays;
    match kind {
        ProtocolKind::None | ProtocolKind::Excited => {
            let (q0, q1, r, a) = (0, 1, 2, 3);
            // ⟨1|H|r⟩ = Ω*/2, so the phase enters as e^{+iφ} on |r⟩⟨1|.
            couplings.push((q1, r, Source::RabiR, true, 0.5));
            if role == Role::Target {
                couplings.push((q0, r, Source::RabiRp, true, 0.5));
            }
            diag[r] = -(delta + delta_prime);
            if dressed {
                couplings.push((r, a, Source::Dressing, false, 1.0));
                diag[a] = cfg.chi * delta;
            }
            for i in [q0, q1, a] {
                jumps.push((i, r, g.gamma_r / 3.0));
            }
            if kind == ProtocolKind::Excited {
                for j in [q0, q1] {
                    jumps.push((j, a, g.gamma_a / 2.0));
                }
            }
        }
        ProtocolKind::Ground => {
            let (q0, q1, s, p, a) = (0, 1, 2, 3, 4);
            couplings.push((q1, s, Source::RabiR, true, 0.5));
            if role == Role::Target {
                couplings.push((q0, s, Source::RabiRp, true, 0.5));
            }
            diag[s] = -(delta + delta_prime);
            diag[p] = -(delta + delta_prime);
            if dressed {
                couplings.push((p, a, Source::Dressing, false, 1.0));
                diag[a] = cfg.chi * delta;
            }
            for i in [q0, q1, a] {
                jumps.push((i, s, g.gamma_s / 3.0));
                jumps.push((i, p, g.gamma_p / 3.0));
            }
        }
    }
    AtomPieces { diag, couplings, jumps }
}

/// Two-atom coupling(s) that are not products of single-atom terms.
fn interaction_entries(cfg: &ProtocolConfig) -> (Vec<(usize, f64)>, Vec<(usize, usize, f64)>) {
    let d = cfg.kind.atom_dim();
    match cfg.kind {
        ProtocolKind::None | ProtocolKind::Excited => (vec![(2 * d + 2, cfg.v)], vec![]),
        ProtocolKind::Ground => (vec![], vec![(2 * d + 2, 3 * d + 3, cfg.v)]),
    }
}

pub fn compile(cfg: &ProtocolConfig, noise: &NoiseSample) -> CompiledModel {
    let d = cfg.kind.atom_dim();
    let n = d * d;
    let ctrl = atom_pieces(cfg, Role::Control, noise.delta_c, noise.delta_prime);
    let targ = atom_pieces(cfg, Role::Target, noise.delta_t, noise.delta_prime);

    let mut diag = vec![0.0; n];
    for a in 0..d {
        for b in 0..d {
            diag[a * d + b] = ctrl.diag[a] + targ.diag[b];
        }
    }
    let (extra_diag, extra_off) = interaction_entries(cfg);
    for (k, v) in extra_diag {
        diag[k] += v;
    }

    let mut couplings = Vec::new();
    for &(i, j, source, conj, s) in &ctrl.couplings {
        for b in 0..d {
            couplings.push(Coupling { row: i * d + b, col: j * d + b, source, conj, scale: C64::new(s, 0.0) });
        }
    }
    for &(i, j, source, conj, s) in &targ.couplings {
        for a in 0..d {
            couplings.push(Coupling { row: a * d + i, col: a * d + j, source, conj, scale: C64::new(s, 0.0) });
        }
    }
    for (r, c, v) in extra_off {
        if v != 0.0 {
            couplings.push(Coupling { row: r, col: c, source: Source::Const, conj: false, scale: C64::new(v, 0.0) });
        }
    }

    let mut jumps = Vec::new();
    for &(to, from, rate) in &ctrl.jumps {
        if rate > 0.0 {
            let amp = rate.sqrt();
            jumps.push(Jump { entries: (0..d).map(|b| (to * d + b, from * d + b, amp)).collect() });
        }
    }
    for &(to, from, rate) in &targ.jumps {
        if rate > 0.0 {
            let amp = rate.sqrt();
            jumps.push(Jump { entries: (0..d).map(|a| (a * d + to, a * d + from, amp)).collect() });
        }
    }

    CompiledModel { atom_dims: vec![d, d], labels: cfg.kind.labels().to_vec(), diag, couplings, jumps }
}

fn check_time(cfg: &ProtocolConfig, t: f64) -> Result<()> {
    if t < -1e-9 || t > cfg.pulses.t_gate + 1e-9 || !t.is_finite() {
        return Err(Error::OutOfWindow { t, t_gate: cfg.pulses.t_gate });
    }
    Ok(())
}

fn single_atom_hamiltonian(cfg: &ProtocolConfig, role: Role, delta: f64, delta_prime: f64, t: f64) -> ComplexMatrix {
    let p = atom_pieces(cfg, role, delta, delta_prime);
    let d = cfg.kind.atom_dim();
    let drive = cfg.pulses.at(t);
    let mut h = ComplexMatrix::diag_real(&p.diag);
    for (i, j, source, conj, s) in p.couplings {
        let v = drive.get(source) * s;
        let v = if conj { v.conj() } else { v };
        h = &h + &(&ComplexMatrix::unit(d, i, j).scale(v) + &ComplexMatrix::unit(d, j, i).scale(v.conj()));
    }
    h
}

/// Full two-atom `H(t) = H_c ⊗ I + I ⊗ H_t + H_int`.
pub fn hamiltonian_at(cfg: &ProtocolConfig, noise: &NoiseSample, t: f64) -> Result<ComplexMatrix> {
    check_time(cfg, t)?;
    let d = cfg.kind.atom_dim();
    let id = ComplexMatrix::identity(d);
    let hc = single_atom_hamiltonian(cfg, Role::Control, noise.delta_c, noise.delta_prime, t);
    let ht = single_atom_hamiltonian(cfg, Role::Target, noise.delta_t, noise.delta_prime, t);
    let mut h = &kron(&hc, &id) + &kron(&id, &ht);
    let (extra_diag, extra_off) = interaction_entries(cfg);
    for (k, v) in extra_diag {
        h[(k, k)] += C64::new(v, 0.0);
    }
    for (r, c, v) in extra_off {
        h[(r, c)] += C64::new(v, 0.0);
        h[(c, r)] += C64::new(v, 0.0);
    }
    Ok(h)
}

/// Two-atom jump operators `L ⊗ I` and `I ⊗ L`; zero-rate channels are
/// omitted.
pub fn lindblad_ops(cfg: &ProtocolConfig) -> Vec<ComplexMatrix> {
    let d = cfg.kind.atom_dim();
    let id = ComplexMatrix::identity(d);
    let mut out = Vec::new();
    for (role, left) in [(Role::Control, true), (Role::Target, false)] {
        for (to, from, rate) in atom_pieces(cfg, role, 0.0, 0.0).jumps {
            if rate <= 0.0 {
                continue;
            }
            let l = ComplexMatrix::unit(d, to, from).scale(C64::new(rate.sqrt(), 0.0));
            out.push(if left { kron(&l, &id) } else { kron(&id, &l) });
        }
    }
    out
}

/// Computational basis state `|c t⟩` (c, t ∈ {0, 1}) as a full-space index.
pub fn computational_index(kind: ProtocolKind, c: usize, t: usize) -> usize {
    c * kind.atom_dim() + t
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::mhz;
    use crate::pulseshape::{DressingConfig, PhaseProfile};
    use crate::qmat::ZERO;
    use proptest::prelude::*;

    fn pulses(dressing: DressingConfig, om: f64, omp: f64) -> PulseSet {
        PulseSet::new(2.0, om, 1e6, omp, 1e6, PhaseProfile::composite(mhz(-3.0), 0.4, -0.9), dressing).unwrap()
    }

    fn cfg(kind: ProtocolKind, dressed: bool) -> ProtocolConfig {
        let dressing = if dressed { DressingConfig::new(mhz(200.0), mhz(288.0)).unwrap() } else { DressingConfig::off() };
        ProtocolConfig { kind, v: mhz(200.0), chi: 1.627, decays: Decays::excited_default(), pulses: pulses(dressing, mhz(9.0), mhz(8.0)) }
    }

    fn ground_cfg() -> ProtocolConfig {
        ProtocolConfig {
            kind: ProtocolKind::Ground,
            v: mhz(200.0),
            chi: 4.202,
            decays: Decays::ground_default(),
            pulses: pulses(DressingConfig::new(mhz(163.0), mhz(352.0)).unwrap(), mhz(8.39), mhz(7.94)),
        }
    }

    #[test]
    fn no_dressing_structure() {
        let c = ProtocolConfig { v: mhz(200.0), ..cfg(ProtocolKind::None, false) };
        let noise = NoiseSample::ZERO;
        let d = 4;
        let hc = single_atom_hamiltonian(&c, Role::Control, 0.0, 0.0, 1.0);
        let ht = single_atom_hamiltonian(&c, Role::Target, 0.0, 0.0, 1.0);
        let off = |m: &ComplexMatrix| {
            let mut n = 0;
            for r in 0..d {
                for col in 0..d {
                    if r != col && m[(r, col)] != ZERO {
                        n += 1;
                    }
                }
            }
            n
        };
        // |1⟩⟨r| on the control, |1⟩⟨r| and |0⟩⟨r| on the target, each with its conjugate.
        assert_eq!(off(&hc) + off(&ht), 6);
        assert!(hc[(1, 2)] != ZERO && ht[(1, 2)] != ZERO && ht[(0, 2)] != ZERO);
        let h = hamiltonian_at(&c, &noise, 1.0).unwrap();
        let rr = 2 * d + 2;
        for k in 0..16 {
            let expect = if k == rr { mhz(200.0) } else { 0.0 };
            assert!((h[(k, k)].re - expect).abs() < 1e-12);
        }
        for k in 0..16 {
            assert_eq!(h[(k, 3 * d + 3)], ZERO);
            assert_eq!(h[(3, k)], ZERO);
        }
    }

    #[test]
    fn excited_diagonal_readoff() {
        let mut c = cfg(ProtocolKind::Excited, true);
        c.pulses.amp_r.omega_max = 0.0;
        c.pulses.amp_rp.omega_max = 0.0;
        let delta = 1.7;
        let hc = single_atom_hamiltonian(&c, Role::Control, delta, 0.0, 0.3);
        let diag: Vec<f64> = (0..4).map(|k| hc[(k, k)].re).collect();
        assert_eq!(diag, vec![0.0, 0.0, -delta, c.chi * delta]);
    }

    #[test]
    fn delta_prime_skips_aux_level() {
        let c = cfg(ProtocolKind::Excited, true);
        let noise = NoiseSample { delta_c: 0.0, delta_t: 0.0, delta_prime: 0.5 };
        let h = hamiltonian_at(&c, &noise, 0.0).unwrap();
        // |0a⟩ and |a0⟩ are untouched, |0r⟩ gets −δ′.
        assert_eq!(h[(3, 3)].re, 0.0);
        assert_eq!(h[(12, 12)].re, 0.0);
        assert_eq!(h[(2, 2)].re, -0.5);
    }

    #[test]
    fn dressing_disabled_matches_none_on_three_levels() {
        let mut ex = cfg(ProtocolKind::Excited, false);
        ex.chi = 3.0;
        let none = ProtocolConfig { kind: ProtocolKind::None, ..ex };
        let noise = NoiseSample { delta_c: 0.3, delta_t: -0.2, delta_prime: 0.1 };
        for t in [0.0, 0.5, 1.3, 2.0] {
            let a = hamiltonian_at(&ex, &noise, t).unwrap();
            let b = hamiltonian_at(&none, &noise, t).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn interaction_placement() {
        let ex = cfg(ProtocolKind::Excited, true);
        let z = |c: &ProtocolConfig| {
            let mut c = *c;
            c.pulses.amp_r.omega_max = 0.0;
            c.pulses.amp_rp.omega_max = 0.0;
            c.pulses.dressing = DressingConfig::off();
            c
        };
        let h = hamiltonian_at(&z(&ex), &NoiseSample::ZERO, 0.0).unwrap();
        let nz: Vec<(usize, usize)> = (0..16).flat_map(|r| (0..16).map(move |c| (r, c))).filter(|&(r, c)| h[(r, c)] != ZERO).collect();
        assert_eq!(nz, vec![(10, 10)]);

        let g = ground_cfg();
        let h = hamiltonian_at(&z(&g), &NoiseSample::ZERO, 0.0).unwrap();
        let nz: Vec<(usize, usize)> = (0..25).flat_map(|r| (0..25).map(move |c| (r, c))).filter(|&(r, c)| h[(r, c)] != ZERO).collect();
        assert_eq!(nz, vec![(12, 18), (18, 12)]);
    }

    #[test]
    fn lindblad_counts_and_coefficients() {
        assert_eq!(lindblad_ops(&cfg(ProtocolKind::Excited, true)).len(), 10);
        assert_eq!(lindblad_ops(&ground_cfg()).len(), 12);
        assert_eq!(lindblad_ops(&cfg(ProtocolKind::None, false)).len(), 6);
        let off = cfg(ProtocolKind::Excited, true).with_decays(Decays::NONE);
        assert!(lindblad_ops(&off).is_empty());

        let g = 0.7;
        let c = cfg(ProtocolKind::Excited, true).with_decays(Decays { gamma_r: 3.0 * g, ..Decays::NONE });
        for l in lindblad_ops(&c) {
            let m = l.as_slice().iter().fold(0.0f64, |m, z| m.max(z.norm()));
            assert!((m - g.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn lindblad_operator_sum() {
        let c = cfg(ProtocolKind::Excited, true);
        let mut s = ComplexMatrix::zeros(16, 16);
        for l in lindblad_ops(&c) {
            s = &s + &(&l.dagger() * &l);
        }
        for r in 0..16 {
            for col in 0..16 {
                if r != col {
                    assert_eq!(s[(r, col)], ZERO);
                }
            }
        }
        let (gr, ga) = (c.decays.gamma_r, c.decays.gamma_a);
        for a in 0..4 {
            for b in 0..4 {
                let rate = |l: usize| match l {
                    2 => gr,
                    3 => ga,
                    _ => 0.0,
                };
                assert!((s[(a * 4 + b, a * 4 + b)].re - rate(a) - rate(b)).abs() < 1e-12);
            }
        }
        // trace of ΣL†L over the product space: each single-atom rate appears d times
        let single = 2.0 * gr + 2.0 * ga;
        assert!((s.trace().re - 4.0 * single).abs() < 1e-12);
    }

    #[test]
    fn sparse_matches_dense() {
        let noise = NoiseSample { delta_c: 0.31, delta_t: -0.7, delta_prime: 0.05 };
        for c in [cfg(ProtocolKind::None, false), cfg(ProtocolKind::Excited, true), ground_cfg()] {
            let m = compile(&c, &noise);
            for t in [0.0, 0.37, 1.0, 1.91] {
                let dense = hamiltonian_at(&c, &noise, t).unwrap();
                let sparse = m.dense_hamiltonian(&c.pulses.at(t));
                assert!(dense.max_abs_diff(&sparse) < 1e-12);
            }
            let a = lindblad_ops(&c);
            let b = m.dense_jumps();
            assert_eq!(a.len(), b.len());
            for l in b {
                assert!(a.iter().any(|x| x.max_abs_diff(&l) < 1e-15));
            }
        }
    }

    #[test]
    fn out_of_window_and_unknown_kind() {
        let c = cfg(ProtocolKind::Excited, true);
        assert!(matches!(hamiltonian_at(&c, &NoiseSample::ZERO, 2.5), Err(Error::OutOfWindow { .. })));
        assert!(matches!("rydberg".parse::<ProtocolKind>(), Err(Error::UnknownKind(_))));
        assert_eq!("ground".parse::<ProtocolKind>().unwrap(), ProtocolKind::Ground);
    }

    proptest! {
        #[test]
        fn hamiltonian_is_hermitian(
            kind in 0usize..3, t in 0.0f64..2.0,
            dc in -10.0f64..10.0, dt in -10.0f64..10.0, dp in -5.0f64..5.0,
            chi in 0.0f64..50.0, om in 0.0f64..130.0,
        ) {
            let mut c = match kind { 0 => cfg(ProtocolKind::None, false), 1 => cfg(ProtocolKind::Excited, true), _ => ground_cfg() };
            c.chi = chi;
            c.pulses.amp_r.omega_max = om;
            let h = hamiltonian_at(&c, &NoiseSample { delta_c: dc, delta_t: dt, delta_prime: dp }, t).unwrap();
            prop_assert!(h.is_hermitian(1e-12));
        }
    }
}
