//! CNOT fidelity, time-spent populations and the decay error budget.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::{evolve_model, IntegratorSpec, Trajectory};
use crate::protocol::{compile, computational_index, Decays, NoiseSample, ProtocolConfig, ProtocolKind};
use crate::qmat::{psd_sqrt, ComplexMatrix, DensityMatrix, C64, ZERO};

/// A two-qubit gate on the computational subspace, embedded in a protocol's
/// level scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealGate {
    /// 4×4 unitary in the order |00⟩, |01⟩, |10⟩, |11⟩.
    pub matrix: ComplexMatrix,
}

impl IdealGate {
    pub fn cnot() -> Self {
        let m = ComplexMatrix::from_real(
            4,
            4,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        )
        .expect("4x4");
        Self { matrix: m }
    }

    /// Image of computational state `q` as a full-space vector.
    pub fn image(&self, kind: ProtocolKind, q: usize) -> Vec<C64> {
        let mut v = vec![ZERO; kind.dim()];
        for p in 0..4 {
            v[computational_index(kind, p / 2, p % 2)] = self.matrix[(p, q)];
        }
        v
    }

    pub fn embed(&self, kind: ProtocolKind) -> ComplexMatrix {
        let n = kind.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for p in 0..4 {
            for q in 0..4 {
                m[(computational_index(kind, p / 2, p % 2), computational_index(kind, q / 2, q % 2))] = self.matrix[(p, q)];
            }
        }
        m
    }
}

pub const BASIS_LABELS: [&str; 4] = ["00", "01", "10", "11"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateResult {
    pub fidelity: f64,
    /// Order |00⟩, |01⟩, |10⟩, |11⟩.
    pub per_state: [f64; 4],
    /// Time-integrated population of the laser-excited Rydberg level(s), μs.
    pub p_r: f64,
    /// Time-integrated population of the dressing level, μs.
    pub p_a: f64,
    /// Every level, summed over atoms and averaged over inputs, μs.
    pub populations: BTreeMap<String, f64>,
    pub max_trace_drift: f64,
    pub steps: usize,
    pub epsilon_r: Option<f64>,
    pub epsilon_a: Option<f64>,
}

/// `Tr√(√σ ρ √σ)`
pub fn uhlmann(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    if (sigma.purity() - 1.0).abs() < 1e-12 {
        let eig = sigma.matrix().herm_eig()?;
        let n = sigma.dim();
        let psi: Vec<C64> = (0..n).map(|r| eig.vectors[(r, n - 1)]).collect();
        return Ok(uhlmann_pure(rho, &psi));
    }
    let s = psd_sqrt(sigma.matrix())?;
    let inner = s.matmul(rho.matrix())?.matmul(&s)?;
    let f = psd_sqrt(&inner)?.trace().re;
    Ok(f.clamp(0.0, 1.0))
}

/// `√⟨ψ|ρ|ψ⟩` for a normalised `ψ`.
pub fn uhlmann_pure(rho: &DensityMatrix, psi: &[C64]) -> f64 {
    rho.expectation_pure(psi).max(0.0).sqrt().min(1.0)
}

fn labels_for(kind: ProtocolKind) -> (&'static [&'static str], &'static [&'static str]) {
    match kind {
        ProtocolKind::None | ProtocolKind::Excited => (&["r"], &["a"]),
        ProtocolKind::Ground => (&["s", "p"], &["a"]),
    }
}

/// Evolves one computational input and scores it against its ideal image.
pub fn basis_run(
    cfg: &ProtocolConfig,
    noise: &NoiseSample,
    spec: &IntegratorSpec,
    gate: &IdealGate,
    q: usize,
) -> Result<(f64, Trajectory)> {
    cfg.validate()?;
    let kind = cfg.kind;
    let plan = spec.plan_for(cfg)?;
    let model = compile(cfg, noise);
    let rho0 = DensityMatrix::basis(kind.dim(), computational_index(kind, q / 2, q % 2));
    let tr = evolve_model(&model, &cfg.pulses, &rho0, cfg.t_gate(), plan)?;
    let f = uhlmann_pure(&tr.final_state, &gate.image(kind, q));
    Ok((f, tr))
}

pub fn gate_fidelity_with(cfg: &ProtocolConfig, noise: &NoiseSample, spec: &IntegratorSpec, gate: &IdealGate) -> Result<GateResult> {
    let mut per_state = [0.0; 4];
    let mut pops: BTreeMap<String, f64> = BTreeMap::new();
    let mut drift = 0.0f64;
    let mut steps = 0;
    for q in 0..4 {
        let (f, tr) = basis_run(cfg, noise, spec, gate, q)?;
        per_state[q] = f;
        for (k, v) in tr.population_map() {
            *pops.entry(k).or_insert(0.0) += 0.25 * v;
        }
        drift = drift.max(tr.trace_drift);
        steps = tr.steps;
    }
    let (rl, al) = labels_for(cfg.kind);
    let sum = |ls: &[&str]| ls.iter().map(|l| pops.get(*l).copied().unwrap_or(0.0)).sum::<f64>();
    Ok(GateResult {
        fidelity: per_state.iter().sum::<f64>() / 4.0,
        per_state,
        p_r: sum(rl),
        p_a: sum(al),
        populations: pops,
        max_trace_drift: drift,
        steps,
        epsilon_r: None,
        epsilon_a: None,
    })
}

/// Mean Uhlmann fidelity of the four basis inputs against their CNOT images.
pub fn gate_fidelity(cfg: &ProtocolConfig, noise: &NoiseSample, spec: &IntegratorSpec) -> Result<GateResult> {
    gate_fidelity_with(cfg, noise, spec, &IdealGate::cnot())
}

/// `(ε_r, ε_a)`: infidelity with only the Rydberg decay switched on, and
/// with only the dressing-level decay switched on.
pub fn error_decomposition(cfg: &ProtocolConfig, noise: &NoiseSample, spec: &IntegratorSpec) -> Result<(f64, f64)> {
    let d = cfg.decays;
    let only_r = Decays { gamma_a: 0.0, ..d };
    let only_a = Decays { gamma_r: 0.0, gamma_s: 0.0, gamma_p: 0.0, ..d };
    let er = 1.0 - gate_fidelity(&cfg.with_decays(only_r), noise, spec)?.fidelity;
    let ea = 1.0 - gate_fidelity(&cfg.with_decays(only_a), noise, spec)?.fidelity;
    Ok((er, ea))
}

/// `(ε_r, ε_a)` as fidelity lost to each decay channel alone, measured
/// against the decay-free run with the same noise.
pub fn decay_excess(cfg: &ProtocolConfig, noise: &NoiseSample, spec: &IntegratorSpec) -> Result<(f64, f64)> {
    let f0 = gate_fidelity(&cfg.with_decays(Decays::NONE), noise, spec)?.fidelity;
    let (er, ea) = error_decomposition(cfg, noise, spec)?;
    Ok((er - (1.0 - f0), ea - (1.0 - f0)))
}

/// Fidelity of the evolved equal superposition of the four basis states
/// against its ideal image. Sensitive to relative phases between branches;
/// diagnostic only.
pub fn superposition_fidelity(cfg: &ProtocolConfig, noise: &NoiseSample, spec: &IntegratorSpec) -> Result<f64> {
    cfg.validate()?;
    let kind = cfg.kind;
    let gate = IdealGate::cnot();
    let mut psi = vec![ZERO; kind.dim()];
    for q in 0..4 {
        psi[computational_index(kind, q / 2, q % 2)] = C64::new(0.5, 0.0);
    }
    let target = gate.embed(kind).apply(&psi)?;
    let rho0 = DensityMatrix::pure(&psi)?;
    let plan = spec.plan_for(cfg)?;
    let tr = evolve_model(&compile(cfg, noise), &cfg.pulses, &rho0, cfg.t_gate(), plan)?;
    Ok(uhlmann_pure(&tr.final_state, &target))
}
