//! Fixed-step RK4 integration of the Lindblad master equation.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{compile, hamiltonian_at, lindblad_ops, CompiledModel, Drive, NoiseSample, ProtocolConfig};
use crate::qmat::{ComplexMatrix, DensityMatrix, C64, I, ZERO};

/// Trace drift beyond which a run is reported as numerically unstable.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    /// Explicit step in μs; `None` derives it from `samples_per_period`.
    pub dt: Option<f64>,
    pub samples_per_period: u32,
    pub method: Method,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self { dt: None, samples_per_period: 64, method: Method::Rk4 }
    }
}

/// Resolved step count and size for one window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPlan {
    pub steps: usize,
    pub dt: f64,
}

impl IntegratorSpec {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt: Some(dt), ..Self::default() }
    }

    pub fn with_samples(samples_per_period: u32) -> Self {
        Self { samples_per_period, ..Self::default() }
    }

    /// Largest admissible step: at most `T_g/2000` and, when dressing is on,
    /// `1/(samples · Δ_d/2π)`.
    pub fn max_dt(&self, t_gate: f64, dressing_delta: Option<f64>) -> f64 {
        let mut max = t_gate / 2000.0;
        if let Some(dd) = dressing_delta {
            if dd > 0.0 {
                max = max.min(TAU / (self.samples_per_period as f64 * dd));
            }
        }
        max
    }

    /// Plans the steps for a window. `fastest` (rad/μs) is the largest
    /// frequency in the generator; the automatic step resolves it with the
    /// same number of samples per period as the dressing tone.
    pub fn plan(&self, t_gate: f64, dressing_delta: Option<f64>, fastest: f64) -> Result<StepPlan> {
        if self.samples_per_period == 0 {
            return Err(Error::InvalidParameter("samples_per_period must be positive".into()));
        }
        if !(t_gate > 0.0) {
            return Err(Error::InvalidParameter(format!("window length {t_gate}")));
        }
        let max = self.max_dt(t_gate, dressing_delta);
        let dt = match self.dt {
            Some(dt) => {
                if !(dt > 0.0) || dt > max * (1.0 + 1e-12) {
                    return Err(Error::StepTooLarge { dt, max });
                }
                dt
            }
            None if fastest > 0.0 => max.min(TAU / (self.samples_per_period as f64 * fastest)),
            None => max,
        };
        let steps = (t_gate / dt - 1e-9).ceil().max(1.0) as usize;
        Ok(StepPlan { steps, dt: t_gate / steps as f64 })
    }

    pub fn plan_for(&self, cfg: &ProtocolConfig) -> Result<StepPlan> {
        let d = &cfg.pulses.dressing;
        let dressed = d.enabled && cfg.kind != crate::protocol::ProtocolKind::None;
        let mut fastest = cfg.v.abs();
        if dressed {
            fastest = fastest.max(d.delta_d + d.omega_d);
        }
        self.plan(cfg.t_gate(), dressed.then_some(d.delta_d), fastest)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub final_state: DensityMatrix,
    /// Level labels of each atom.
    pub labels: Vec<&'static str>,
    /// `populations[atom][level]` = ∫ population dt, μs.
    pub populations: Vec<Vec<f64>>,
    pub steps: usize,
    pub dt: f64,
    pub trace_drift: f64,
}

impl Trajectory {
    /// Time-integrated population of `label`, summed over atoms.
    pub fn integrated(&self, label: &str) -> f64 {
        match self.labels.iter().position(|&l| l == label) {
            Some(k) => self.populations.iter().map(|p| p[k]).sum(),
            None => 0.0,
        }
    }

    pub fn integrated_atom(&self, atom: usize, label: &str) -> f64 {
        self.labels.iter().position(|&l| l == label).map_or(0.0, |k| self.populations[atom][k])
    }

    pub fn population_map(&self) -> BTreeMap<String, f64> {
        self.labels.iter().map(|&l| (l.to_string(), self.integrated(l))).collect()
    }
}

/// `−i[H, ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})` with dense operators.
pub fn lindblad_rhs_dense(h: &ComplexMatrix, ls: &[ComplexMatrix], rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let comm = &h.matmul(rho)? - &rho.matmul(h)?;
    let mut out = comm.scale(-I);
    for l in ls {
        let ld = l.dagger();
        let ldl = ld.matmul(l)?;
        let jump = l.matmul(rho)?.matmul(&ld)?;
        let anti = &ldl.matmul(rho)? + &rho.matmul(&ldl)?;
        out = &out + &(&jump - &anti.scale(C64::new(0.5, 0.0)));
    }
    Ok(out)
}

/// Master-equation derivative for a protocol at time `t`.
pub fn lindblad_rhs(cfg: &ProtocolConfig, noise: &NoiseSample, t: f64, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    if rho.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch(format!("state dim {} vs protocol dim {}", rho.dim(), cfg.dim())));
    }
    let h = hamiltonian_at(cfg, noise, t)?;
    lindblad_rhs_dense(&h, &lindblad_ops(cfg), rho.matrix())
}

/// Indices reachable from `seed` through couplings (either direction) and
/// jumps (column to row).
fn reachable(model: &CompiledModel, seed: &[usize]) -> Vec<usize> {
    let n = model.dim();
    let mut adj = vec![Vec::new(); n];
    for c in &model.couplings {
        if c.scale != ZERO {
            adj[c.row].push(c.col);
            adj[c.col].push(c.row);
        }
    }
    for j in &model.jumps {
        for &(r, c, a) in &j.entries {
            if a != 0.0 {
                adj[c].push(r);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = seed.to_vec();
    for &s in seed {
        seen[s] = true;
    }
    while let Some(k) = stack.pop() {
        for &m in &adj[k] {
            if !seen[m] {
                seen[m] = true;
                stack.push(m);
            }
        }
    }
    (0..n).filter(|&k| seen[k]).collect()
}

/// Groups `keep` into blocks outside of which `ρ` stays zero: coupled
/// levels share a block, and a jump maps a block's coherences into one block.
fn coherence_blocks(model: &CompiledModel, keep: &[usize], seed: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let n = model.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    fn union(p: &mut [usize], a: usize, b: usize) -> bool {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
        ra != rb
    }
    for c in model.couplings.iter().filter(|c| c.scale != ZERO) {
        union(&mut parent, c.row, c.col);
    }
    for &(i, j) in seed {
        union(&mut parent, i, j);
    }
    loop {
        let mut changed = false;
        for j in &model.jumps {
            let e: Vec<&(usize, usize, f64)> = j.entries.iter().filter(|e| e.2 != 0.0).collect();
            for &&(r1, c1, _) in &e {
                for &&(r2, c2, _) in &e {
                    if r1 == r2 {
                        changed |= union(&mut parent, c1, c2);
                    }
                    if find(&mut parent, c1) == find(&mut parent, c2) {
                        changed |= union(&mut parent, r1, r2);
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &k in keep {
        let r = find(&mut parent, k);
        blocks.entry(r).or_default().push(k);
    }
    blocks.into_values().collect()
}

struct Term {
    row: usize,
    col: usize,
    source: crate::protocol::Source,
    conj: bool,
    scale: C64,
}

/// Generator restricted to an invariant subspace, in the form
/// `dρ = −i(H_eff ρ − ρ H_eff†) + Σ feed`.
struct Reduced {
    n: usize,
    /// Diagonal of `H_eff = H − (i/2)ΣL†L`.
    heff_diag: Vec<C64>,
    terms: Vec<Term>,
    /// Off-diagonal constant parts of `−(i/2)ΣL†L`, `(row, col, value)`.
    heff_extra: Vec<(usize, usize, C64)>,
    /// `dρ[dst] += w · ρ[src]` with flat indices.
    feed: Vec<(usize, usize, f64)>,
    /// Flat reduced-diagonal index → (atom, level) accumulator slots.
    pop_slots: Vec<Vec<usize>>,
    /// Block range `[start, end)` of every reduced index.
    block: Vec<(usize, usize)>,
    /// Flat index ranges holding the nonzero part of `ρ`.
    spans: Vec<(usize, usize)>,
}

impl Reduced {
    /// `blocks` must be contiguous runs of `keep`.
    fn new(model: &CompiledModel, keep: &[usize], blocks: &[Vec<usize>]) -> Self {
        let n = keep.len();
        let mut block = Vec::with_capacity(n);
        let mut start = 0;
        for b in blocks {
            block.extend(std::iter::repeat((start, start + b.len())).take(b.len()));
            start += b.len();
        }
        debug_assert_eq!(start, n);
        let spans: Vec<(usize, usize)> = (0..n).map(|i| (i * n + block[i].0, i * n + block[i].1)).collect();
        let in_block = |flat: usize| {
            let (i, j) = (flat / n, flat % n);
            j >= block[i].0 && j < block[i].1
        };
        let full = model.dim();
        let mut map = vec![usize::MAX; full];
        for (i, &k) in keep.iter().enumerate() {
            map[k] = i;
        }
        let mut gamma = ComplexMatrix::zeros(n, n);
        let mut feed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for j in &model.jumps {
            let e: Vec<(usize, usize, f64)> = j
                .entries
                .iter()
                .filter(|&&(_, c, a)| a != 0.0 && map[c] != usize::MAX)
                .map(|&(r, c, a)| (map[r], map[c], a))
                .collect();
            for &(r1, c1, a1) in &e {
                for &(r2, c2, a2) in &e {
                    *feed.entry((r1 * n + r2, c1 * n + c2)).or_insert(0.0) += a1 * a2;
                    if r1 == r2 {
                        gamma[(c1, c2)] += C64::new(a1 * a2, 0.0);
                    }
                }
            }
        }
        let mut heff_diag: Vec<C64> = keep.iter().map(|&k| C64::new(model.diag[k], 0.0)).collect();
        let mut heff_extra = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let g = gamma[(r, c)];
                if g == ZERO {
                    continue;
                }
                if r == c {
                    heff_diag[r] += C64::new(0.0, -0.5 * g.re);
                } else {
                    heff_extra.push((r, c, g * C64::new(0.0, -0.5)));
                }
            }
        }
        let terms = model
            .couplings
            .iter()
            .filter(|c| map[c.row] != usize::MAX && map[c.col] != usize::MAX && c.scale != ZERO)
            .map(|c| Term { row: map[c.row], col: map[c.col], source: c.source, conj: c.conj, scale: c.scale })
            .collect();
        let d = model.atom_dims[0];
        let pop_slots = keep
            .iter()
            .map(|&k| model.decompose(k).iter().enumerate().map(|(atom, &lvl)| atom * d + lvl).collect())
            .collect();
        Reduced {
            n,
            heff_diag,
            terms,
            heff_extra,
            feed: feed
                .into_iter()
                .filter(|&((_, s), w)| w != 0.0 && in_block(s))
                .map(|((d, s), w)| (d, s, w))
                .collect(),
            pop_slots,
            block,
            spans,
        }
    }

    /// `out = L[ρ]` given the current coupling values.
    fn rhs(&self, vals: &[C64], rho: &[C64], a: &mut [C64], out: &mut [C64]) {
        let n = self.n;
        for (i, &(s, e)) in self.spans.iter().enumerate() {
            let h = self.heff_diag[i];
            for (x, y) in a[s..e].iter_mut().zip(&rho[s..e]) {
                *x = h * y;
            }
        }
        for (t, &v) in self.terms.iter().zip(vals) {
            let vc = v.conj();
            let (r, c) = (t.row, t.col);
            let (s, e) = self.block[r];
            for j in s..e {
                let rc = rho[c * n + j];
                let rr = rho[r * n + j];
                a[r * n + j] += v * rc;
                a[c * n + j] += vc * rr;
            }
        }
        for &(r, c, g) in &self.heff_extra {
            let (s, e) = self.block[r];
            for j in s..e {
                a[r * n + j] += g * rho[c * n + j];
            }
        }
        for i in 0..n {
            let (s, e) = self.block[i];
            for j in s..e {
                let z = a[i * n + j] - a[j * n + i].conj();
                out[i * n + j] = C64::new(z.im, -z.re);
            }
        }
        for &(d, s, w) in &self.feed {
            out[d] += rho[s] * w;
        }
    }

    fn values(&self, drive: &dyn Drive, t: f64, vals: &mut [C64]) {
        let dv = drive.at(t);
        for (v, term) in vals.iter_mut().zip(&self.terms) {
            let s = dv.get(term.source);
            *v = term.scale * if term.conj { s.conj() } else { s };
        }
    }

    fn accumulate(&self, rho: &[C64], pops: &mut [f64], weight: f64) {
        let n = self.n;
        for (k, slots) in self.pop_slots.iter().enumerate() {
            let p = rho[k * n + k].re * weight;
            for &s in slots {
                pops[s] += p;
            }
        }
    }
}

/// Integrates a compiled model from `rho0` over `[0, t_gate]`.
pub fn evolve_model(
    model: &CompiledModel,
    drive: &dyn Drive,
    rho0: &DensityMatrix,
    t_gate: f64,
    plan: StepPlan,
) -> Result<Trajectory> {
    if (plan.steps as f64 * plan.dt - t_gate).abs() > 1e-9 * t_gate.max(1.0) {
        return Err(Error::InvalidParameter(format!("{} steps of {} us do not span {t_gate} us", plan.steps, plan.dt)));
    }
    let full = model.dim();
    if rho0.dim() != full {
        return Err(Error::DimensionMismatch(format!("state dim {} vs model dim {full}", rho0.dim())));
    }
    if !rho0.matrix().is_hermitian(1e-10) {
        return Err(Error::NotHermitian);
    }
    let m0 = rho0.matrix();
    let seed: Vec<usize> = (0..full).filter(|&r| (0..full).any(|c| m0[(r, c)] != ZERO)).collect();
    let pairs: Vec<(usize, usize)> =
        seed.iter().flat_map(|&r| seed.iter().map(move |&c| (r, c))).filter(|&(r, c)| m0[(r, c)] != ZERO).collect();
    let blocks = coherence_blocks(model, &reachable(model, &seed), &pairs);
    let keep: Vec<usize> = blocks.concat();
    let red = Reduced::new(model, &keep, &blocks);
    let n = red.n;
    let nn = n * n;

    let mut rho = vec![ZERO; nn];
    for (i, &ki) in keep.iter().enumerate() {
        for (j, &kj) in keep.iter().enumerate() {
            rho[i * n + j] = m0[(ki, kj)];
        }
    }
    let tr0: f64 = (0..n).map(|k| rho[k * n + k].re).sum();

    let nslots = model.atom_dims.len() * model.atom_dims[0];
    let mut pops = vec![0.0; nslots];
    let (steps, dt) = (plan.steps, plan.dt);

    let nt = red.terms.len();
    let (mut v1, mut v2, mut v3) = (vec![ZERO; nt], vec![ZERO; nt], vec![ZERO; nt]);
    let mut a = vec![ZERO; nn];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![ZERO; nn], vec![ZERO; nn], vec![ZERO; nn], vec![ZERO; nn]);
    let mut tmp = vec![ZERO; nn];

    red.accumulate(&rho, &mut pops, 0.5 * dt);
    red.values(drive, 0.0, &mut v1);
    for step in 0..steps {
        let t = step as f64 * dt;
        red.values(drive, t + 0.5 * dt, &mut v2);
        red.values(drive, t + dt, &mut v3);

        let stage = |x: &mut [C64], r: &[C64], k: &[C64], h: f64| {
            for &(s, e) in &red.spans {
                for ((x, r), k) in x[s..e].iter_mut().zip(&r[s..e]).zip(&k[s..e]) {
                    *x = r + k * h;
                }
            }
        };
        red.rhs(&v1, &rho, &mut a, &mut k1);
        stage(&mut tmp, &rho, &k1, 0.5 * dt);
        red.rhs(&v2, &tmp, &mut a, &mut k2);
        stage(&mut tmp, &rho, &k2, 0.5 * dt);
        red.rhs(&v2, &tmp, &mut a, &mut k3);
        stage(&mut tmp, &rho, &k3, dt);
        red.rhs(&v3, &tmp, &mut a, &mut k4);
        let w = dt / 6.0;
        for &(s, e) in &red.spans {
            for idx in s..e {
                rho[idx] += (k1[idx] + (k2[idx] + k3[idx]) * 2.0 + k4[idx]) * w;
            }
        }
        for i in 0..n {
            rho[i * n + i].im = 0.0;
            for j in i + 1..red.block[i].1 {
                let avg = (rho[i * n + j] + rho[j * n + i].conj()) * 0.5;
                rho[i * n + j] = avg;
                rho[j * n + i] = avg.conj();
            }
        }
        let weight = if step + 1 == steps { 0.5 * dt } else { dt };
        red.accumulate(&rho, &mut pops, weight);
        std::mem::swap(&mut v1, &mut v3);
    }

    let tr: f64 = (0..n).map(|k| rho[k * n + k].re).sum();
    let drift = (tr - tr0).abs();
    if !(drift <= TRACE_DRIFT_LIMIT) {
        return Err(Error::TraceDrift(drift));
    }

    let mut out = ComplexMatrix::zeros(full, full);
    for (i, &ki) in keep.iter().enumerate() {
        for (j, &kj) in keep.iter().enumerate() {
            out[(ki, kj)] = rho[i * n + j];
        }
    }
    let d = model.atom_dims[0];
    Ok(Trajectory {
        final_state: DensityMatrix::from_evolved(out)?,
        labels: model.labels.clone(),
        populations: pops.chunks(d).map(|c| c.to_vec()).collect(),
        steps,
        dt,
        trace_drift: drift,
    })
}

/// Integrates a two-atom protocol from `rho0` over the gate window.
pub fn evolve(cfg: &ProtocolConfig, noise: &NoiseSample, rho0: &DensityMatrix, spec: &IntegratorSpec) -> Result<Trajectory> {
    cfg.validate()?;
    if rho0.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch(format!("state dim {} vs protocol dim {}", rho0.dim(), cfg.dim())));
    }
    let plan = spec.plan_for(cfg)?;
    evolve_model(&compile(cfg, noise), &cfg.pulses, rho0, cfg.t_gate(), plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mhz;
    use crate::protocol::{Coupling, DriveValues, Jump, Source};
    use crate::qmat::ONE;
    use approx::assert_abs_diff_eq;

    /// Two-level system with constant drive `Ω/2 (|0⟩⟨1| + h.c.)`, detuning
    /// `−δ` on `|1⟩` and optional decay `|0⟩⟨1|`.
    pub(crate) struct Rabi {
        pub omega: f64,
    }

    impl Drive for Rabi {
        fn at(&self, _t: f64) -> DriveValues {
            DriveValues { rabi_r: C64::new(self.omega, 0.0), rabi_rp: ZERO, dressing: 0.0 }
        }
    }

    fn two_level(delta: f64, gamma: f64) -> CompiledModel {
        CompiledModel {
            atom_dims: vec![2],
            labels: vec!["g", "e"],
            diag: vec![0.0, -delta],
            couplings: vec![Coupling { row: 0, col: 1, source: Source::RabiR, conj: false, scale: C64::new(0.5, 0.0) }],
            jumps: if gamma > 0.0 { vec![Jump { entries: vec![(0, 1, gamma.sqrt())] }] } else { vec![] },
        }
    }

    #[test]
    fn coherence_blocks_are_invariant() {
        use crate::protocol::{computational_index, Decays, ProtocolKind};
        use crate::pulseshape::{DressingConfig, PhaseProfile, PulseSet};
        let pulses = PulseSet::new(
            1.0,
            mhz(9.0),
            0.2,
            mhz(8.0),
            0.25,
            PhaseProfile::composite(mhz(2.0), 0.3, -1.0),
            DressingConfig::new(mhz(150.0), mhz(300.0)).unwrap(),
        )
        .unwrap();
        let cfg = ProtocolConfig { kind: ProtocolKind::Excited, v: mhz(200.0), chi: 1.6, decays: Decays::excited_default(), pulses };
        let model = compile(&cfg, &NoiseSample::ZERO);
        let q = computational_index(cfg.kind, 1, 0);
        let blocks = coherence_blocks(&model, &reachable(&model, &[q]), &[(q, q)]);
        let mut sizes: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![4, 12]);
        // a block-diagonal state has a block-diagonal derivative
        let n = cfg.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for b in &blocks {
            for (x, &i) in b.iter().enumerate() {
                for (y, &j) in b.iter().enumerate() {
                    m[(i, j)] = if i == j { C64::new(1.0 / 16.0, 0.0) } else { C64::new(0.01 * (x + y) as f64, 0.003 * (x as f64 - y as f64)) };
                }
            }
        }
        let rho = DensityMatrix::from_evolved(m).unwrap();
        let d = lindblad_rhs(&cfg, &NoiseSample::ZERO, 0.4, &rho).unwrap();
        let block_of = |k: usize| blocks.iter().position(|b| b.contains(&k));
        for i in 0..n {
            for j in 0..n {
                if block_of(i).is_none() || block_of(i) != block_of(j) {
                    assert_eq!(d[(i, j)], ZERO, "({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn rhs_trivial_cases() {
        let rho = DensityMatrix::maximally_mixed(3);
        let z = lindblad_rhs_dense(&ComplexMatrix::zeros(3, 3), &[], rho.matrix()).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        let h = ComplexMatrix::diag_real(&[1.0, -2.0, 0.5]);
        let r = ComplexMatrix::diag_real(&[0.2, 0.3, 0.5]);
        assert_eq!(lindblad_rhs_dense(&h, &[], &r).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn rhs_amplitude_damping() {
        let g: f64 = 0.37;
        let l = ComplexMatrix::unit(2, 0, 1).scale(C64::new(g.sqrt(), 0.0));
        let rho = ComplexMatrix::unit(2, 1, 1);
        let d = lindblad_rhs_dense(&ComplexMatrix::zeros(2, 2), &[l], &rho).unwrap();
        assert_abs_diff_eq!(d[(1, 1)].re, -g, epsilon = 1e-15);
        assert_abs_diff_eq!(d[(0, 0)].re, g, epsilon = 1e-15);
    }

    #[test]
    fn sparse_rhs_matches_dense_route() {
        use crate::protocol::{Decays, ProtocolKind};
        use crate::pulseshape::{DressingConfig, PhaseProfile, PulseSet};
        let pulses = PulseSet::new(
            1.0,
            mhz(9.0),
            0.2,
            mhz(8.0),
            0.25,
            PhaseProfile::composite(mhz(2.0), 0.3, -1.0),
            DressingConfig::new(mhz(150.0), mhz(300.0)).unwrap(),
        )
        .unwrap();
        for (kind, decays) in [(ProtocolKind::Excited, Decays::excited_default()), (ProtocolKind::Ground, Decays::ground_default())] {
            let cfg = ProtocolConfig { kind, v: mhz(200.0), chi: 1.6, decays, pulses };
            let noise = NoiseSample { delta_c: 0.4, delta_t: -0.3, delta_prime: 0.1 };
            let n = cfg.dim();
            // random-ish Hermitian unit-trace matrix on the full space
            let mut m = ComplexMatrix::zeros(n, n);
            for r in 0..n {
                for c in 0..n {
                    let x = ((r * 7 + c * 3) % 11) as f64 * 0.01;
                    let y = ((r * 5 + c * 13) % 7) as f64 * 0.01;
                    m[(r, c)] = C64::new(x + if r == c { 1.0 } else { 0.0 }, y);
                }
            }
            let m = &m + &m.dagger();
            let tr = m.trace();
            let m = m.scale(ONE / tr);
            let rho = DensityMatrix::from_evolved(m.clone()).unwrap();
            let t = 0.37;
            let dense = lindblad_rhs(&cfg, &noise, t, &rho).unwrap();

            let model = compile(&cfg, &noise);
            let keep: Vec<usize> = (0..n).collect();
            let red = Reduced::new(&model, &keep, &[keep.clone()]);
            let mut vals = vec![ZERO; red.terms.len()];
            red.values(&cfg.pulses, t, &mut vals);
            let mut a = vec![ZERO; n * n];
            let mut out = vec![ZERO; n * n];
            red.rhs(&vals, m.as_slice(), &mut a, &mut out);
            let sparse = ComplexMatrix::from_vec(n, n, out).unwrap();
            assert!(dense.max_abs_diff(&sparse) < 1e-10 * dense.max_abs().max(1.0));
        }
    }

    #[test]
    fn resonant_pi_pulse() {
        let model = two_level(0.0, 0.0);
        let om = mhz(1.0);
        let rho0 = DensityMatrix::basis(2, 0);
        let plan = IntegratorSpec::default().plan(0.5, None, 0.0).unwrap();
        let tr = evolve_model(&model, &Rabi { omega: om }, &rho0, 0.5, plan).unwrap();
        assert!((tr.final_state.population(1) - 1.0).abs() <= 1e-6);
        // ∫ sin²(Ωt/2) dt over a π pulse = T/2
        assert_abs_diff_eq!(tr.integrated("e"), 0.25, epsilon = 1e-6);
    }

    #[test]
    fn detuned_rabi_peak_half() {
        let om = mhz(1.0);
        let model = two_level(om, 0.0);
        let rho0 = DensityMatrix::basis(2, 0);
        // generalized Rabi frequency √2 Ω: peak transfer at t = π/(√2 Ω)
        let t = std::f64::consts::PI / (2f64.sqrt() * om);
        let plan = IntegratorSpec::default().plan(t, None, 0.0).unwrap();
        let tr = evolve_model(&model, &Rabi { omega: om }, &rho0, t, plan).unwrap();
        assert!((tr.final_state.population(1) - 0.5).abs() <= 1e-6);
    }

    #[test]
    fn amplitude_damping_decay() {
        let g = 0.8;
        let model = two_level(0.0, g);
        let rho0 = DensityMatrix::basis(2, 1);
        let plan = IntegratorSpec::default().plan(2.0, None, 0.0).unwrap();
        let tr = evolve_model(&model, &Rabi { omega: 0.0 }, &rho0, 2.0, plan).unwrap();
        assert_abs_diff_eq!(tr.final_state.population(1), (-g * 2.0f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!(tr.integrated("e"), (1.0 - (-g * 2.0f64).exp()) / g, epsilon = 1e-6);
    }

    #[test]
    fn step_too_large() {
        let spec = IntegratorSpec::with_dt(1e-3);
        assert!(matches!(spec.plan(1.0, None, 0.0), Err(Error::StepTooLarge { .. })));
        let spec = IntegratorSpec::with_dt(1e-4);
        assert!(matches!(spec.plan(1.0, Some(mhz(400.0)), 0.0), Err(Error::StepTooLarge { .. })));
        assert!(spec.plan(1.0, Some(mhz(100.0)), 0.0).is_ok());
    }
}
