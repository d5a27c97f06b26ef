//! Thermal Doppler sampling and the parameter sweeps built on it.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomlib::{doppler_shift, Species, ThermalModel, WavevectorSpec, TRANSITION_CASES};
use crate::error::{Error, Result};
use crate::evolve::IntegratorSpec;
use crate::gatemetrics::gate_fidelity;
use crate::protocol::{NoiseSample, ProtocolConfig};
use crate::TWO_PI;

/// Independent Gaussian shifts `k_r·v` on each atom and a uniform `δ′`.
pub fn sample_noise<R: Rng + ?Sized>(
    model: &ThermalModel,
    k: &WavevectorSpec,
    delta_prime_bound: f64,
    rng: &mut R,
) -> NoiseSample {
    let v = model.v_rms();
    let (delta_c, delta_t) = if v > 0.0 {
        let n = Normal::new(0.0, v).expect("finite v_rms");
        (doppler_shift(k.k_r, n.sample(rng)), doppler_shift(k.k_r, n.sample(rng)))
    } else {
        (0.0, 0.0)
    };
    let b = delta_prime_bound.abs();
    let delta_prime = if b > 0.0 { rng.gen_range(-b..=b) } else { 0.0 };
    NoiseSample { delta_c, delta_t, delta_prime }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Deterministic Doppler shift, rad/μs.
    Delta,
    /// Deterministic `δ′`, rad/μs, on top of `SweepSpec::fixed_delta`.
    DeltaPrime,
    /// Monte Carlo over temperature in K.
    Temperature,
    /// Monte Carlo over every `(T, δ′ bound)` pair; `grid` holds T.
    Ratio2d { delta_prime_bounds: Vec<f64> },
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Delta => "delta",
            Axis::DeltaPrime => "delta_prime",
            Axis::Temperature => "temperature",
            Axis::Ratio2d { .. } => "ratio2d",
        }
    }
}

/// Which atoms see a deterministic `δ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    #[default]
    Both,
    ControlOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub samples_per_point: usize,
    pub master_seed: u64,
    pub mode: DeltaMode,
    /// Common `δ` for the `DeltaPrime` axis, rad/μs.
    pub fixed_delta: f64,
    /// Uniform `δ′` half-width for the `Temperature` axis, rad/μs.
    pub delta_prime_bound: f64,
    pub species: Species,
    pub k: WavevectorSpec,
}

impl SweepSpec {
    pub fn new(axis: Axis, grid: Vec<f64>) -> Self {
        Self {
            axis,
            grid,
            samples_per_point: 300,
            master_seed: 0,
            mode: DeltaMode::Both,
            fixed_delta: 0.0,
            delta_prime_bound: 0.0,
            species: Species::Rb87,
            k: TRANSITION_CASES[2].wavevectors(),
        }
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.samples_per_point = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn increasing(g: &[f64], what: &str) -> Result<()> {
            if g.is_empty() || g.iter().any(|x| !x.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParameter(format!("{what} grid must be nonempty and strictly increasing")));
            }
            Ok(())
        }
        increasing(&self.grid, self.axis.name())?;
        if let Axis::Ratio2d { delta_prime_bounds } = &self.axis {
            increasing(delta_prime_bounds, "delta_prime")?;
        }
        if self.samples_per_point == 0 {
            return Err(Error::InvalidParameter("samples_per_point must be >= 1".into()));
        }
        if matches!(self.axis, Axis::Temperature | Axis::Ratio2d { .. }) && self.grid[0] < 0.0 {
            return Err(Error::InvalidParameter("negative temperature".into()));
        }
        Ok(())
    }

    fn points(&self) -> Vec<Point> {
        match &self.axis {
            Axis::Delta => self.grid.iter().map(|&d| Point::Fixed(self.shift(d, 0.0))).collect(),
            Axis::DeltaPrime => self.grid.iter().map(|&p| Point::Fixed(self.shift(self.fixed_delta, p))).collect(),
            Axis::Temperature => self.grid.iter().map(|&t| Point::Random { t, bound: self.delta_prime_bound }).collect(),
            Axis::Ratio2d { delta_prime_bounds } => self
                .grid
                .iter()
                .flat_map(|&t| delta_prime_bounds.iter().map(move |&bound| Point::Random { t, bound }))
                .collect(),
        }
    }

    fn shift(&self, delta: f64, delta_prime: f64) -> NoiseSample {
        let delta_t = match self.mode {
            DeltaMode::Both => delta,
            DeltaMode::ControlOnly => 0.0,
        };
        NoiseSample { delta_c: delta, delta_t, delta_prime }
    }
}

#[derive(Clone, Copy, Debug)]
enum Point {
    Fixed(NoiseSample),
    Random { t: f64, bound: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub y: Option<f64>,
    pub f_mean: f64,
    pub f_stderr: f64,
    pub p_r: f64,
    pub p_a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Locale-independent CSV. Detuning columns are reported in MHz.
    pub fn to_csv(&self) -> String {
        let head = match self.axis.as_str() {
            "delta" => "delta_MHz",
            "delta_prime" => "delta_prime_MHz",
            "ratio2d" => "T_K,delta_prime_MHz",
            _ => "T_K",
        };
        let mut s = format!("{head},F_mean,F_stderr,P_r_us,P_a_us\n");
        let to_mhz = |x: f64| x / TWO_PI;
        for r in &self.rows {
            match (self.axis.as_str(), r.y) {
                ("delta" | "delta_prime", _) => write!(s, "{}", to_mhz(r.x)),
                (_, Some(y)) => write!(s, "{},{}", r.x, to_mhz(y)),
                _ => write!(s, "{}", r.x),
            }
            .unwrap();
            writeln!(s, ",{},{},{},{}", r.f_mean, r.f_stderr, r.p_r, r.p_a).unwrap();
        }
        s
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based seed for one Monte Carlo realisation.
pub fn sample_seed(master: u64, point: u64, sample: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point) ^ sample)
}

/// Noise realisations of a single Monte Carlo point, in sample order.
pub fn draw_point(spec: &SweepSpec, temperature: f64, bound: f64, point: usize) -> Result<Vec<NoiseSample>> {
    let model = ThermalModel::new(temperature, spec.species)?;
    Ok((0..spec.samples_per_point)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(spec.master_seed, point as u64, s as u64));
            sample_noise(&model, &spec.k, bound, &mut rng)
        })
        .collect())
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.iter().all(|x| *x == xs[0]) {
        return (xs[0], 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn sweep(cfg: &ProtocolConfig, sweep: &SweepSpec, spec: &IntegratorSpec) -> Result<SweepResult> {
    sweep.validate()?;
    cfg.validate()?;
    let points = sweep.points();
    // (point, noise, replicate count)
    let mut jobs: Vec<(usize, NoiseSample, usize)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        match *p {
            Point::Fixed(n) => jobs.push((i, n, 1)),
            Point::Random { t, bound } if t == 0.0 && bound == 0.0 => {
                jobs.push((i, NoiseSample::ZERO, sweep.samples_per_point))
            }
            Point::Random { t, bound } => {
                jobs.extend(draw_point(sweep, t, bound, i)?.into_iter().map(|n| (i, n, 1)));
            }
        }
    }
    let evals: Vec<(f64, f64, f64)> = jobs
        .par_iter()
        .map(|(_, noise, _)| gate_fidelity(cfg, noise, spec).map(|g| (g.fidelity, g.p_r, g.p_a)))
        .collect::<Result<_>>()?;

    let mut per_point: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); points.len()];
    for ((i, _, reps), e) in jobs.iter().zip(evals) {
        per_point[*i].extend(std::iter::repeat(e).take(*reps));
    }
    let coords: Vec<(f64, Option<f64>)> = match &sweep.axis {
        Axis::Ratio2d { delta_prime_bounds } => sweep
            .grid
            .iter()
            .flat_map(|&t| delta_prime_bounds.iter().map(move |&b| (t, Some(b))))
            .collect(),
        _ => sweep.grid.iter().map(|&x| (x, None)).collect(),
    };
    let rows = coords
        .into_iter()
        .zip(per_point)
        .map(|((x, y), v)| {
            let fs: Vec<f64> = v.iter().map(|e| e.0).collect();
            let (f_mean, f_stderr) = mean_stderr(&fs);
            let col = |f: fn(&(f64, f64, f64)) -> f64| mean_stderr(&v.iter().map(f).collect::<Vec<_>>()).0;
            SweepRow { x, y, f_mean, f_stderr, p_r: col(|e| e.1), p_a: col(|e| e.2) }
        })
        .collect();
    Ok(SweepResult { axis: sweep.axis.name().to_string(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mhz;

    #[test]
    fn zero_temperature_is_silent() {
        let m = ThermalModel::new(0.0, Species::Rb87).unwrap();
        let k = TRANSITION_CASES[2].wavevectors();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            assert_eq!(sample_noise(&m, &k, 0.0, &mut rng), NoiseSample::ZERO);
        }
    }

    #[test]
    fn doppler_spread_at_5mk() {
        let spec = SweepSpec::new(Axis::Temperature, vec![5e-3]).with_samples(100_000).with_seed(11);
        let xs: Vec<f64> = draw_point(&spec, 5e-3, 0.0, 0).unwrap().iter().map(|n| n.delta_c / TWO_PI).collect();
        let (m, se) = mean_stderr(&xs);
        let sd = se * (xs.len() as f64).sqrt();
        assert!((sd / 0.554 - 1.0).abs() < 0.02, "std {sd}");
        assert!(m.abs() < 0.01);
    }

    #[test]
    fn delta_prime_uniform_within_bound() {
        let spec = SweepSpec::new(Axis::Temperature, vec![0.0]).with_samples(2000);
        let b = mhz(0.3);
        let xs = draw_point(&spec, 0.0, b, 4).unwrap();
        assert!(xs.iter().all(|n| n.delta_prime.abs() <= b && n.delta_c == 0.0));
        assert!(xs.iter().any(|n| n.delta_prime > 0.9 * b) && xs.iter().any(|n| n.delta_prime < -0.9 * b));
    }

    #[test]
    fn seeds_are_counter_based() {
        let spec = SweepSpec::new(Axis::Temperature, vec![1e-3]).with_samples(50).with_seed(7);
        let a = draw_point(&spec, 1e-3, 0.0, 2).unwrap();
        let b = draw_point(&spec, 1e-3, 0.0, 2).unwrap();
        assert_eq!(a, b);
        let c = draw_point(&spec, 1e-3, 0.0, 3).unwrap();
        assert_ne!(a, c);
        // a longer run shares its prefix
        let long = draw_point(&spec.clone().with_samples(80), 1e-3, 0.0, 2).unwrap();
        assert_eq!(&long[..50], &a[..]);
    }

    #[test]
    fn validation() {
        assert!(SweepSpec::new(Axis::Delta, vec![]).validate().is_err());
        assert!(SweepSpec::new(Axis::Delta, vec![1.0, 1.0]).validate().is_err());
        assert!(SweepSpec::new(Axis::Delta, vec![1.0]).with_samples(0).validate().is_err());
        assert!(SweepSpec::new(Axis::Temperature, vec![-1.0]).validate().is_err());
        let bad = SweepSpec::new(Axis::Ratio2d { delta_prime_bounds: vec![2.0, 1.0] }, vec![0.0]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn control_only_mode() {
        let mut s = SweepSpec::new(Axis::Delta, vec![0.5]);
        s.mode = DeltaMode::ControlOnly;
        match s.points()[0] {
            Point::Fixed(n) => assert_eq!((n.delta_c, n.delta_t), (0.5, 0.0)),
            _ => panic!(),
        }
    }

    #[test]
    fn csv_layout() {
        let r = SweepResult {
            axis: "ratio2d".into(),
            rows: vec![SweepRow { x: 1e-3, y: Some(TWO_PI * 0.5), f_mean: 0.99, f_stderr: 0.001, p_r: 0.2, p_a: 0.0 }],
        };
        let csv = r.to_csv();
        assert_eq!(csv, "T_K,delta_prime_MHz,F_mean,F_stderr,P_r_us,P_a_us\n0.001,0.5,0.99,0.001,0.2,0\n");
    }
}
