//! JSON run configuration. Keys ending in `_mhz` are frequencies in MHz and
//! are multiplied by 2π on load; `_rate_per_us` keys are plain rates;
//! `_2pi` keys are phases in units of 2π. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::atomlib::{Species, TRANSITION_CASES};
use crate::dopplermc::{Axis, DeltaMode, SweepSpec};
use crate::error::{Error, Result};
use crate::evolve::IntegratorSpec;
use crate::protocol::{Decays, ProtocolConfig, ProtocolKind};
use crate::pulseshape::{DressingConfig, PhaseKind, PhaseProfile, PulseSet};
use crate::{mhz, TWO_PI};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulses: Option<PulsesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub kind: String,
    pub chi: f64,
    pub v_mhz: f64,
    #[serde(default)]
    pub gamma_r_rate_per_us: f64,
    #[serde(default)]
    pub gamma_a_rate_per_us: f64,
    #[serde(default)]
    pub gamma_s_rate_per_us: f64,
    #[serde(default)]
    pub gamma_p_rate_per_us: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsesSection {
    pub t_gate_us: f64,
    pub omega_max_mhz: f64,
    pub width_us: f64,
    pub omega_p_max_mhz: f64,
    pub width_p_us: f64,
    pub phase: PhaseKind,
    pub delta0_mhz: f64,
    #[serde(default)]
    pub delta1_2pi: f64,
    #[serde(default)]
    pub delta2_2pi: f64,
    #[serde(default = "two")]
    pub alpha: f64,
    #[serde(default)]
    pub omega_d_mhz: f64,
    #[serde(default)]
    pub delta_d_mhz: f64,
}

fn two() -> f64 {
    2.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_period: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `delta`, `delta_prime`, `temperature` or `ratio2d`.
    pub axis: String,
    /// Temperatures in K (`temperature`, `ratio2d`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_k: Option<Vec<f64>>,
    /// Detunings in MHz (`delta`, `delta_prime`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_mhz: Option<Vec<f64>>,
    /// `ratio2d` second axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_prime_bounds_mhz: Option<Vec<f64>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: DeltaMode,
    #[serde(default)]
    pub fixed_delta_mhz: f64,
    #[serde(default)]
    pub delta_prime_bound_mhz: f64,
    #[serde(default = "default_species")]
    pub species: Species,
}

fn default_samples() -> usize {
    300
}

fn default_species() -> Species {
    Species::Rb87
}

fn cfg_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(cfg_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Builds the gate configuration, starting from `scenario` when given and
    /// overriding with any explicit sections.
    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        let base = match &self.scenario {
            Some(id) => Some(crate::scenarios::load_gate(id)?),
            None => None,
        };
        let (kind, v, chi, decays) = match (&self.protocol, &base) {
            (Some(p), _) => {
                let kind: ProtocolKind = p.kind.parse().map_err(cfg_err)?;
                let decays = Decays {
                    gamma_r: p.gamma_r_rate_per_us,
                    gamma_a: p.gamma_a_rate_per_us,
                    gamma_s: p.gamma_s_rate_per_us,
                    gamma_p: p.gamma_p_rate_per_us,
                };
                (kind, mhz(p.v_mhz), p.chi, decays)
            }
            (None, Some(b)) => (b.kind, b.v, b.chi, b.decays),
            (None, None) => return Err(Error::Config("missing 'protocol' section (or 'scenario')".into())),
        };
        let pulses = match (&self.pulses, &base) {
            (Some(p), _) => p.to_pulses(kind)?,
            (None, Some(b)) => b.pulses,
            (None, None) => return Err(Error::Config("missing 'pulses' section (or 'scenario')".into())),
        };
        let cfg = ProtocolConfig { kind, v, chi, decays, pulses };
        cfg.validate().map_err(cfg_err)?;
        Ok(cfg)
    }

    pub fn integrator_spec(&self) -> Result<IntegratorSpec> {
        let mut spec = IntegratorSpec::default();
        if let Some(s) = &self.integrator {
            if let Some(n) = s.samples_per_period {
                if n == 0 {
                    return Err(Error::Config("samples_per_period must be >= 1".into()));
                }
                spec.samples_per_period = n;
            }
            if let Some(dt) = s.dt_us {
                if !(dt > 0.0) {
                    return Err(Error::Config(format!("dt_us = {dt}")));
                }
                spec.dt = Some(dt);
            }
        }
        Ok(spec)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let s = self.sweep.as_ref().ok_or_else(|| Error::Config("missing 'sweep' section".into()))?;
        s.to_spec()
    }

    /// Config document reproducing `cfg`.
    pub fn from_protocol(cfg: &ProtocolConfig) -> Self {
        Self {
            protocol: Some(ProtocolSection::from_config(cfg)),
            pulses: Some(PulsesSection::from_pulses(&cfg.pulses)),
            ..Self::default()
        }
    }
}

impl ProtocolSection {
    pub fn from_config(cfg: &ProtocolConfig) -> Self {
        Self {
            kind: cfg.kind.name().to_string(),
            chi: cfg.chi,
            v_mhz: cfg.v / TWO_PI,
            gamma_r_rate_per_us: cfg.decays.gamma_r,
            gamma_a_rate_per_us: cfg.decays.gamma_a,
            gamma_s_rate_per_us: cfg.decays.gamma_s,
            gamma_p_rate_per_us: cfg.decays.gamma_p,
        }
    }
}

impl PulsesSection {
    pub fn to_pulses(&self, kind: ProtocolKind) -> Result<PulseSet> {
        let phase = PhaseProfile {
            kind: self.phase,
            delta0: mhz(self.delta0_mhz),
            delta1: mhz(self.delta1_2pi),
            delta2: mhz(self.delta2_2pi),
            alpha: self.alpha,
        };
        let dressing = if kind != ProtocolKind::None && self.omega_d_mhz != 0.0 {
            DressingConfig::new(mhz(self.omega_d_mhz), mhz(self.delta_d_mhz)).map_err(cfg_err)?
        } else {
            DressingConfig::off()
        };
        PulseSet::new(
            self.t_gate_us,
            mhz(self.omega_max_mhz),
            self.width_us,
            mhz(self.omega_p_max_mhz),
            self.width_p_us,
            phase,
            dressing,
        )
        .map_err(cfg_err)
    }

    pub fn from_pulses(p: &PulseSet) -> Self {
        let to = |x: f64| x / TWO_PI;
        Self {
            t_gate_us: p.t_gate,
            omega_max_mhz: to(p.amp_r.omega_max),
            width_us: p.amp_r.width,
            omega_p_max_mhz: to(p.amp_rp.omega_max),
            width_p_us: p.amp_rp.width,
            phase: p.phase.kind,
            delta0_mhz: to(p.phase.delta0),
            delta1_2pi: to(p.phase.delta1),
            delta2_2pi: to(p.phase.delta2),
            alpha: p.phase.alpha,
            omega_d_mhz: if p.dressing.enabled { to(p.dressing.omega_d) } else { 0.0 },
            delta_d_mhz: if p.dressing.enabled { to(p.dressing.delta_d) } else { 0.0 },
        }
    }
}

impl SweepSection {
    pub fn to_spec(&self) -> Result<SweepSpec> {
        let need = |g: &Option<Vec<f64>>, key: &str| {
            g.clone().ok_or_else(|| Error::Config(format!("axis '{}' needs '{key}'", self.axis)))
        };
        let (axis, grid) = match self.axis.as_str() {
            "delta" => (Axis::Delta, need(&self.grid_mhz, "grid_mhz")?.into_iter().map(mhz).collect()),
            "delta_prime" => (Axis::DeltaPrime, need(&self.grid_mhz, "grid_mhz")?.into_iter().map(mhz).collect()),
            "temperature" => (Axis::Temperature, need(&self.grid_k, "grid_k")?),
            "ratio2d" => {
                let b = need(&self.delta_prime_bounds_mhz, "delta_prime_bounds_mhz")?;
                (Axis::Ratio2d { delta_prime_bounds: b.into_iter().map(mhz).collect() }, need(&self.grid_k, "grid_k")?)
            }
            other => return Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        };
        let spec = SweepSpec {
            axis,
            grid,
            samples_per_point: self.samples,
            master_seed: self.seed,
            mode: self.mode,
            fixed_delta: mhz(self.fixed_delta_mhz),
            delta_prime_bound: mhz(self.delta_prime_bound_mhz),
            species: self.species,
            k: TRANSITION_CASES[2].wavevectors(),
        };
        spec.validate().map_err(cfg_err)?;
        Ok(spec)
    }
}
