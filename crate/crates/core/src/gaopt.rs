//! Real-coded genetic algorithm and its pulse-parameter wrapper.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::IntegratorSpec;
use crate::gatemetrics::gate_fidelity;
use crate::mhz;
use crate::protocol::{NoiseSample, ProtocolConfig, ProtocolKind};
use crate::pulseshape::{DressingConfig, PhaseKind, PhaseProfile, PulseSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gene {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl Gene {
    pub fn new(name: &str, lower: f64, upper: f64) -> Self {
        Self { name: name.to_string(), lower, upper }
    }

    pub fn fixed(name: &str, value: f64) -> Self {
        Self::new(name, value, value)
    }

    fn range(&self) -> f64 {
        self.upper - self.lower
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GAConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub elitism: usize,
    pub blend_alpha: f64,
    /// Mutation σ as a fraction of each gene's range.
    pub mutation_sigma: f64,
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            tournament: 3,
            elitism: 2,
            blend_alpha: 0.5,
            mutation_sigma: 0.05,
            mutation_rate: 0.15,
            seed: 0,
        }
    }
}

impl GAConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || self.elitism >= self.population || self.tournament == 0 {
            return Err(Error::InvalidParameter(format!(
                "GA needs population >= 4, elitism < population, tournament >= 1 ({self:?})"
            )));
        }
        if !(self.blend_alpha >= 0.0) || !(self.mutation_sigma >= 0.0) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::InvalidParameter("bad GA operator settings".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GAOutcome {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness after each generation, starting with the initial population.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

fn validate_genes(genes: &[Gene]) -> Result<()> {
    if genes.is_empty() {
        return Err(Error::InvalidParameter("empty search space".into()));
    }
    for g in genes {
        if !g.lower.is_finite() || !g.upper.is_finite() || g.lower > g.upper {
            return Err(Error::InvalidParameter(format!("bad bounds for {}: [{}, {}]", g.name, g.lower, g.upper)));
        }
    }
    Ok(())
}

type Key = Vec<u64>;

fn key(x: &[f64]) -> Key {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Maximises `fitness` over the box `genes`. NaN scores count as −∞.
pub fn run_ga<F>(genes: &[Gene], ga: &GAConfig, fitness: F) -> Result<GAOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    validate_genes(genes)?;
    ga.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);
    let mut cache: HashMap<Key, f64> = HashMap::new();

    let mut pop: Vec<Vec<f64>> = (0..ga.population)
        .map(|_| genes.iter().map(|g| if g.range() > 0.0 { rng.gen_range(g.lower..=g.upper) } else { g.lower }).collect())
        .collect();

    let evaluate = |pop: &[Vec<f64>], cache: &mut HashMap<Key, f64>| -> Vec<f64> {
        let mut fresh: Vec<&Vec<f64>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for x in pop {
            let k = key(x);
            if !cache.contains_key(&k) && seen.insert(k) {
                fresh.push(x);
            }
        }
        let scores: Vec<f64> = fresh
            .par_iter()
            .map(|x| {
                let f = fitness(x);
                if f.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    f
                }
            })
            .collect();
        for (x, f) in fresh.into_iter().zip(scores) {
            cache.insert(key(x), f);
        }
        pop.iter().map(|x| cache[&key(x)]).collect()
    };

    let mut scores = evaluate(&pop, &mut cache);
    let mut history = Vec::with_capacity(ga.generations + 1);
    let best_of = |s: &[f64]| (0..s.len()).fold(0, |b, i| if s[i] > s[b] { i } else { b });
    history.push(scores[best_of(&scores)]);

    let normals: Vec<Option<Normal<f64>>> =
        genes.iter().map(|g| (g.range() > 0.0).then(|| Normal::new(0.0, ga.mutation_sigma * g.range()).unwrap())).collect();

    for _ in 0..ga.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        // stable sort keeps ties in index order
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let mut next: Vec<Vec<f64>> = order[..ga.elitism].iter().map(|&i| pop[i].clone()).collect();

        let idx: Vec<usize> = (0..pop.len()).collect();
        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let picks: Vec<usize> = (0..ga.tournament).map(|_| *idx.choose(rng).unwrap()).collect();
            picks.into_iter().fold(usize::MAX, |b, i| if b == usize::MAX || scores[i] > scores[b] { i } else { b })
        };
        while next.len() < ga.population {
            let (a, b) = (tournament(&mut rng), tournament(&mut rng));
            let child: Vec<f64> = genes
                .iter()
                .enumerate()
                .map(|(j, g)| {
                    let (lo, hi) = (pop[a][j].min(pop[b][j]), pop[a][j].max(pop[b][j]));
                    let span = hi - lo;
                    let mut x = if span > 0.0 {
                        rng.gen_range(lo - ga.blend_alpha * span..=hi + ga.blend_alpha * span)
                    } else {
                        lo
                    };
                    if let Some(n) = &normals[j] {
                        if rng.gen::<f64>() < ga.mutation_rate {
                            x += n.sample(&mut rng);
                        }
                    }
                    g.clamp(x)
                })
                .collect();
            debug_assert!(child.iter().zip(genes).all(|(x, g)| *x >= g.lower && *x <= g.upper));
            next.push(child);
        }
        pop = next;
        scores = evaluate(&pop, &mut cache);
        let best = scores[best_of(&scores)];
        assert!(best >= *history.last().unwrap(), "elitism violated");
        history.push(best);
    }
    let b = best_of(&scores);
    Ok(GAOutcome { best: pop[b].clone(), best_fitness: scores[b], history, evaluations: cache.len() })
}

/// How the dressing detuning is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DressingTie {
    /// `Δ_d` is its own gene.
    Free,
    /// `Δ_d = Ω_d / ratio`.
    Ratio(f64),
}

/// Gene layout over pulse parameters. Frequencies are in MHz, `δ₁`, `δ₂`
/// in units of 2π, times in μs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub genes: Vec<Gene>,
    pub tie: DressingTie,
}

pub const PULSE_GENES: [&str; 11] =
    ["t_gate_us", "omega_max_mhz", "width_us", "omega_p_max_mhz", "width_p_us", "delta0_mhz", "delta1_2pi", "delta2_2pi", "alpha", "omega_d_mhz", "delta_d_mhz"];

impl SearchSpace {
    /// Bounds used for the optimized gate tables. `cap_mhz` is 10 for the
    /// standard search and 20 for the large-amplitude one.
    pub fn standard(kind: ProtocolKind, phase: PhaseKind, cap_mhz: f64, tie: DressingTie) -> Self {
        let mut genes = vec![
            Gene::new("t_gate_us", 0.1, 5.0),
            Gene::new("omega_max_mhz", 0.0, cap_mhz),
            Gene::new("width_us", 0.02, 1.0),
            Gene::new("omega_p_max_mhz", 0.0, cap_mhz),
            Gene::new("width_p_us", 0.02, 1.0),
            Gene::new("delta0_mhz", -20.0, 20.0),
        ];
        let (d12, alpha) = match phase {
            PhaseKind::Linear => ((0.0, 0.0), (2.0, 2.0)),
            PhaseKind::Composite => ((-20.0, 20.0), (2.0, 2.0)),
            PhaseKind::Generalized => ((-20.0, 20.0), (0.0, 4.0)),
        };
        genes.push(Gene::new("delta1_2pi", d12.0, d12.1));
        genes.push(Gene::new("delta2_2pi", d12.0, d12.1));
        genes.push(Gene::new("alpha", alpha.0, alpha.1));
        if kind == ProtocolKind::None {
            genes.push(Gene::fixed("omega_d_mhz", 0.0));
            genes.push(Gene::fixed("delta_d_mhz", 0.0));
        } else {
            genes.push(Gene::new("omega_d_mhz", 0.0, 300.0));
            genes.push(match tie {
                DressingTie::Free => Gene::new("delta_d_mhz", 1.0, 1000.0),
                DressingTie::Ratio(_) => Gene::fixed("delta_d_mhz", 0.0),
            });
        }
        Self { genes, tie }
    }

    /// Zero-width box around an existing configuration.
    pub fn around(cfg: &ProtocolConfig) -> Self {
        Self { genes: PULSE_GENES.iter().zip(encode(cfg)).map(|(n, v)| Gene::fixed(n, v)).collect(), tie: DressingTie::Free }
    }

    pub fn validate(&self) -> Result<()> {
        validate_genes(&self.genes)?;
        if self.genes.len() != PULSE_GENES.len() || self.genes.iter().zip(PULSE_GENES).any(|(g, n)| g.name != n) {
            return Err(Error::InvalidParameter(format!("pulse genes must be {PULSE_GENES:?}")));
        }
        if let DressingTie::Ratio(r) = self.tie {
            if !(r > 0.0) {
                return Err(Error::InvalidParameter(format!("tie ratio {r}")));
            }
        }
        Ok(())
    }

    /// Applies a gene vector to a template; the template keeps `kind`,
    /// `v`, `chi`, decays and the phase kind.
    pub fn apply(&self, template: &ProtocolConfig, x: &[f64]) -> Result<ProtocolConfig> {
        let [t_g, om, w, omp, wp, d0, d1, d2, alpha, od, dd] = <[f64; 11]>::try_from(x)
            .map_err(|_| Error::DimensionMismatch(format!("{} genes", x.len())))?;
        let phase = PhaseProfile { kind: template.pulses.phase.kind, delta0: mhz(d0), delta1: mhz(d1), delta2: mhz(d2), alpha };
        let dressing = if template.kind == ProtocolKind::None || od == 0.0 {
            DressingConfig::off()
        } else {
            let dd = match self.tie {
                DressingTie::Free => dd,
                DressingTie::Ratio(r) => od / r,
            };
            DressingConfig::new(mhz(od), mhz(dd))?
        };
        let pulses = PulseSet::new(t_g, mhz(om), w, mhz(omp), wp, phase, dressing)?;
        let cfg = ProtocolConfig { pulses, ..*template };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Inverse of [`SearchSpace::apply`] for a free tie.
pub fn encode(cfg: &ProtocolConfig) -> [f64; 11] {
    let p = &cfg.pulses;
    let to = |x: f64| x / crate::TWO_PI;
    let (od, dd) = if p.dressing.enabled { (to(p.dressing.omega_d), to(p.dressing.delta_d)) } else { (0.0, 0.0) };
    [
        p.t_gate,
        to(p.amp_r.omega_max),
        p.amp_r.width,
        to(p.amp_rp.omega_max),
        p.amp_rp.width,
        to(p.phase.delta0),
        to(p.phase.delta1),
        to(p.phase.delta2),
        p.phase.alpha,
        od,
        dd,
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub best: ProtocolConfig,
    /// Re-evaluated with the final integrator.
    pub best_fidelity: f64,
    pub genes: Vec<(String, f64)>,
    /// Coarse-integrator fitness per generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Maximises the noise-free gate fidelity (decays as in the template).
pub fn optimize(
    space: &SearchSpace,
    template: &ProtocolConfig,
    ga: &GAConfig,
    search_spec: &IntegratorSpec,
    final_spec: &IntegratorSpec,
) -> Result<OptimizeReport> {
    space.validate()?;
    let out = run_ga(&space.genes, ga, |x| {
        space
            .apply(template, x)
            .and_then(|c| gate_fidelity(&c, &NoiseSample::ZERO, search_spec))
            .map(|g| g.fidelity)
            .unwrap_or(f64::NEG_INFINITY)
    })?;
    let best = space.apply(template, &out.best)?;
    let best_fidelity = gate_fidelity(&best, &NoiseSample::ZERO, final_spec)?.fidelity;
    let mut genes: Vec<(String, f64)> = space.genes.iter().map(|g| g.name.clone()).zip(out.best.iter().copied()).collect();
    if let (DressingTie::Ratio(r), Some(dd)) = (space.tie, genes.iter().position(|g| g.0 == "delta_d_mhz")) {
        genes[dd].1 = out.best[9] / r;
    }
    Ok(OptimizeReport { best, best_fidelity, genes, history: out.history, evaluations: out.evaluations })
}
