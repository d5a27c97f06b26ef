use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use rydgate::atomlib::WavevectorSpec;
use rydgate::config::RunConfig;
use rydgate::dopplermc::{self, Axis, DeltaMode, SweepSpec};
use rydgate::evolve::IntegratorSpec;
use rydgate::gaopt::{self, DressingTie, GAConfig, SearchSpace};
use rydgate::gatemetrics::{error_decomposition, gate_fidelity};
use rydgate::protect::{self, TransferConfig};
use rydgate::protocol::{Decays, NoiseSample, ProtocolConfig};
use rydgate::pulseshape::DressingConfig;
use rydgate::scenarios::{self, ScenarioConfig};
use rydgate::{mhz, Error, TWO_PI};

const THREADS_ENV: &str = "RYDGATE_THREADS";

#[derive(Parser)]
#[command(name = "rydgate", version, about = "Doppler-robust Rydberg CNOT gate simulator")]
struct Cli {
    /// Worker threads (default: available parallelism, or $RYDGATE_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Wavevectors and sensitivity factor from wavelengths in nm
    Chi {
        #[arg(long)]
        lambda_up: f64,
        #[arg(long)]
        lambda_lower: f64,
        #[arg(long)]
        lambda_a: f64,
    },
    /// Gate fidelity of one configuration (JSON)
    Simulate {
        #[command(flatten)]
        src: Source,
        /// Common Doppler shift on both atoms, MHz
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        delta_mhz: f64,
        /// Switch all decays off
        #[arg(long)]
        ideal: bool,
        /// Also report the ε_r / ε_a split
        #[arg(long)]
        decompose: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deterministic or Monte Carlo sweep (CSV)
    Sweep {
        #[command(flatten)]
        src: Source,
        /// delta | delta_prime | temperature | ratio2d
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated: K for temperature axes, MHz for detuning axes
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// ratio2d δ′ bounds, MHz
        #[arg(long)]
        delta_prime_bounds: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Apply a deterministic δ to the control atom only
        #[arg(long)]
        control_only: bool,
        /// δ for the delta_prime axis, MHz
        #[arg(long, allow_hyphen_values = true)]
        fixed_delta_mhz: Option<f64>,
        /// δ′ half-width for the temperature axis, MHz
        #[arg(long)]
        delta_prime_bound_mhz: Option<f64>,
        #[arg(long)]
        ideal: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan Ω_d/Δ_d for the flattest single-atom transfer (JSON)
    Insensitive {
        #[arg(long)]
        chi: f64,
        #[arg(long, default_value_t = 200.0)]
        omega_d_mhz: f64,
        /// Comma-separated Ω_d/Δ_d values
        #[arg(long, default_value = "0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
        ratios: String,
        /// Comma-separated probe detunings, MHz
        #[arg(long, default_value = "-1,-0.5,0.5,1", allow_hyphen_values = true)]
        deltas: String,
        #[arg(long, default_value_t = 3.0)]
        omega_r_mhz: f64,
        #[arg(long, default_value_t = 1.0)]
        tau_us: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single-atom 2nπ transfer infidelity against δ (CSV)
    Transfer {
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        omega_r_mhz: f64,
        #[arg(long, default_value_t = 1.0)]
        tau_us: f64,
        #[arg(long, default_value_t = 0.0)]
        omega_d_mhz: f64,
        #[arg(long, default_value_t = 0.0)]
        delta_d_mhz: f64,
        #[arg(long, default_value_t = 1.0)]
        chi: f64,
        /// Comma-separated detunings, MHz
        #[arg(long, default_value = "-1,-0.5,0,0.5,1", allow_hyphen_values = true)]
        deltas: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Genetic search over pulse parameters (JSON report)
    Optimize {
        #[command(flatten)]
        src: Source,
        /// standard | around (zero-width box at the template)
        #[arg(long, default_value = "standard")]
        space: String,
        /// Rabi-frequency cap, MHz
        #[arg(long, default_value_t = 10.0)]
        cap_mhz: f64,
        /// Ω_d/Δ_d tie; defaults to the template's own ratio
        #[arg(long, conflicts_with = "free_dressing")]
        tie_ratio: Option<f64>,
        /// Search Δ_d as an independent gene
        #[arg(long)]
        free_dressing: bool,
        #[arg(long, default_value_t = 64)]
        population: usize,
        #[arg(long, default_value_t = 200)]
        generations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples per period during the search
        #[arg(long, default_value_t = 10)]
        search_samples: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in parameter sets
    Scenario {
        #[command(subcommand)]
        cmd: ScenarioCmd,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    List,
    /// Evaluate a scenario against its expected observables (JSON)
    Run {
        id: String,
        /// Monte Carlo samples for temperature observables
        #[arg(long, default_value_t = 300)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Source {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario id
    #[arg(long)]
    scenario: Option<String>,
}

impl Source {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut rc = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(id) = &self.scenario {
            rc.scenario = Some(id.clone());
        }
        if rc.scenario.is_none() && rc.protocol.is_none() {
            return Err(Error::Config("need --config or --scenario".into()));
        }
        Ok(rc)
    }
}

fn list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Config(format!("'{x}': {e}"))))
        .collect()
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => {
            say(text);
            Ok(())
        }
    }
}

/// Writes to stdout, treating a closed pipe as success.
fn say(text: &str) {
    let mut o = std::io::stdout().lock();
    let _ = o.write_all(text.as_bytes()).and_then(|_| o.flush());
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn gate_json(cfg: &ProtocolConfig, noise: &NoiseSample, spec: &IntegratorSpec, decompose: bool) -> Result<Value, Error> {
    let mut g = gate_fidelity(cfg, noise, spec)?;
    if decompose {
        let (er, ea) = error_decomposition(cfg, noise, spec)?;
        g.epsilon_r = Some(er);
        g.epsilon_a = Some(ea);
    }
    Ok(serde_json::to_value(g).expect("serializable"))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Chi { lambda_up, lambda_lower, lambda_a } => {
            let k = WavevectorSpec::from_wavelengths(lambda_up, lambda_lower, lambda_a)?;
            say(&format!("k_r={:.3}\nk_a={:.3}\nchi={:.3}\n", k.k_r, k.k_a, k.chi()?));
        }
        Cmd::Simulate { src, delta_mhz, ideal, decompose, out } => {
            let rc = src.load()?;
            let mut cfg = rc.protocol_config()?;
            if ideal {
                cfg = cfg.with_decays(Decays::NONE);
            }
            let spec = rc.integrator_spec()?;
            let v = gate_json(&cfg, &NoiseSample::common(mhz(delta_mhz)), &spec, decompose)?;
            emit(&pretty(&v), &out)?;
        }
        Cmd::Sweep {
            src,
            axis,
            grid,
            delta_prime_bounds,
            samples,
            seed,
            control_only,
            fixed_delta_mhz,
            delta_prime_bound_mhz,
            ideal,
            out,
        } => {
            let rc = src.load()?;
            let mut cfg = rc.protocol_config()?;
            if ideal {
                cfg = cfg.with_decays(Decays::NONE);
            }
            let spec = rc.integrator_spec()?;
            let mut sw = match (&axis, &rc.sweep) {
                (Some(a), _) => {
                    let g = list(grid.as_deref().ok_or_else(|| Error::Config("--axis needs --grid".into()))?)?;
                    let to_mhz = |g: Vec<f64>| g.into_iter().map(mhz).collect::<Vec<f64>>();
                    let (ax, g) = match a.as_str() {
                        "delta" => (Axis::Delta, to_mhz(g)),
                        "delta_prime" => (Axis::DeltaPrime, to_mhz(g)),
                        "temperature" => (Axis::Temperature, g),
                        "ratio2d" => {
                            let b = list(delta_prime_bounds.as_deref().ok_or_else(|| {
                                Error::Config("ratio2d needs --delta-prime-bounds".into())
                            })?)?;
                            (Axis::Ratio2d { delta_prime_bounds: to_mhz(b) }, g)
                        }
                        other => return Err(Error::Config(format!("unknown axis '{other}'"))),
                    };
                    SweepSpec::new(ax, g)
                }
                (None, Some(_)) => rc.sweep_spec()?,
                (None, None) => return Err(Error::Config("need --axis/--grid or a 'sweep' section".into())),
            };
            if let Some(n) = samples {
                sw.samples_per_point = n;
            }
            if let Some(s) = seed {
                sw.master_seed = s;
            }
            if control_only {
                sw.mode = DeltaMode::ControlOnly;
            }
            if let Some(d) = fixed_delta_mhz {
                sw.fixed_delta = mhz(d);
            }
            if let Some(b) = delta_prime_bound_mhz {
                sw.delta_prime_bound = mhz(b);
            }
            sw.validate().map_err(|e| Error::Config(e.to_string()))?;
            let res = dopplermc::sweep(&cfg, &sw, &spec)?;
            emit(&res.to_csv(), &out)?;
        }
        Cmd::Insensitive { chi, omega_d_mhz, ratios, deltas, omega_r_mhz, tau_us, out } => {
            let probe = TransferConfig {
                omega_r: mhz(omega_r_mhz),
                n: None,
                tau: tau_us,
                dressing: DressingConfig::new(mhz(omega_d_mhz), mhz(omega_d_mhz))?,
                chi,
            };
            let deltas: Vec<f64> = list(&deltas)?.into_iter().map(mhz).collect();
            let r = protect::insensitive_scan(chi, mhz(omega_d_mhz), &list(&ratios)?, &deltas, &probe, &IntegratorSpec::default())?;
            let closed = protect::bessel_ratio(chi).ok();
            let v = json!({ "chi": chi, "best_ratio": r.best_ratio, "bessel_z1": closed, "curve": r.curve });
            emit(&pretty(&v), &out)?;
        }
        Cmd::Transfer { scenario, omega_r_mhz, tau_us, omega_d_mhz, delta_d_mhz, chi, deltas, out } => {
            let t = match scenario {
                Some(id) => scenarios::load_transfer(&id)?,
                None => TransferConfig {
                    omega_r: mhz(omega_r_mhz),
                    n: None,
                    tau: tau_us,
                    dressing: if omega_d_mhz > 0.0 {
                        DressingConfig::new(mhz(omega_d_mhz), mhz(delta_d_mhz))?
                    } else {
                        DressingConfig::off()
                    },
                    chi,
                },
            };
            let spec = IntegratorSpec::default();
            let mut csv = String::from("delta_MHz,infidelity\n");
            for d in list(&deltas)? {
                let e = protect::transfer_demo(&t, mhz(d), &spec)?;
                csv.push_str(&format!("{d},{e}\n"));
            }
            emit(&csv, &out)?;
        }
        Cmd::Optimize { src, space, cap_mhz, tie_ratio, free_dressing, population, generations, seed, search_samples, out } => {
            let rc = src.load()?;
            let template = rc.protocol_config()?;
            let d = template.pulses.dressing;
            let tie = match tie_ratio {
                Some(r) => DressingTie::Ratio(r),
                None if free_dressing || !d.enabled => DressingTie::Free,
                None => DressingTie::Ratio(d.omega_d / d.delta_d),
            };
            let space = match space.as_str() {
                "standard" => SearchSpace::standard(template.kind, template.pulses.phase.kind, cap_mhz, tie),
                "around" => SearchSpace::around(&template),
                other => return Err(Error::Config(format!("unknown space '{other}'"))),
            };
            let ga = GAConfig { population, generations, seed, ..GAConfig::default() };
            let final_spec = rc.integrator_spec()?;
            let search = IntegratorSpec { samples_per_period: search_samples, ..final_spec };
            let r = gaopt::optimize(&space, &template, &ga, &search, &final_spec)?;
            let v = json!({
                "best_fidelity": r.best_fidelity,
                "best_config": serde_json::to_value(RunConfig::from_protocol(&r.best)).expect("serializable"),
                "genes": r.genes,
                "history": r.history,
                "evaluations": r.evaluations,
                "seed": seed,
            });
            emit(&pretty(&v), &out)?;
        }
        Cmd::Scenario { cmd: ScenarioCmd::List } => {
            say(&scenarios::ids().iter().map(|id| format!("{id}\n")).collect::<String>());
        }
        Cmd::Scenario { cmd: ScenarioCmd::Run { id, samples, seed } } => {
            let v = run_scenario(&id, samples, seed)?;
            say(&pretty(&v));
        }
    }
    Ok(())
}

fn run_scenario(id: &str, samples: usize, seed: u64) -> Result<Value, Error> {
    let sc = scenarios::load(id)?;
    let spec = IntegratorSpec::default();
    let mut observed = serde_json::Map::new();
    match &sc.config {
        ScenarioConfig::Gate(cfg) => {
            let needs = |k: &str| sc.expected.contains_key(k);
            if needs("F_ideal") || needs("P_r_us") || needs("P_a_us") {
                let g = gate_fidelity(&cfg.with_decays(Decays::NONE), &NoiseSample::ZERO, &spec)?;
                observed.insert("F_ideal".into(), json!(g.fidelity));
                observed.insert("P_r_us".into(), json!(g.p_r));
                observed.insert("P_a_us".into(), json!(g.p_a));
            }
            if needs("F_real_T0") || needs("P_r_us_decay") {
                let g = gate_fidelity(cfg, &NoiseSample::ZERO, &spec)?;
                observed.insert("F_real_T0".into(), json!(g.fidelity));
                observed.insert("P_r_us_decay".into(), json!(g.p_r));
                observed.insert("P_a_us_decay".into(), json!(g.p_a));
            }
            for (key, t) in [("F_50uK", 50e-6), ("F_5mK", 5e-3)] {
                if needs(key) {
                    let sw = SweepSpec::new(Axis::Temperature, vec![t]).with_samples(samples).with_seed(seed);
                    let r = dopplermc::sweep(cfg, &sw, &spec)?;
                    observed.insert(key.into(), json!(r.rows[0].f_mean));
                }
            }
        }
        ScenarioConfig::Transfer(t) => {
            if sc.expected.contains_key("infidelity_at_1MHz") {
                observed.insert("infidelity_at_1MHz".into(), json!(protect::transfer_demo(t, mhz(1.0), &spec)?));
            }
            let mut worst = 0.0f64;
            for i in 0..=20 {
                let d = TWO_PI * (-1.0 + 0.1 * i as f64);
                worst = worst.max(protect::transfer_demo(t, d, &spec)?);
            }
            observed.insert("max_infidelity".into(), json!(worst));
        }
    }
    let checks: Vec<Value> = sc
        .expected
        .iter()
        .map(|(k, e)| {
            let got = observed.get(*k).and_then(Value::as_f64);
            json!({
                "observable": k,
                "expected": e.value,
                "tolerance": e.tolerance,
                "observed": got,
                "pass": got.map(|x| e.accepts(x)),
            })
        })
        .collect();
    Ok(json!({ "id": sc.id, "observed": observed, "checks": checks }))
}

fn init_threads(flag: Option<usize>) -> Result<(), Error> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) => Some(s.parse().map_err(|_| Error::Config(format!("{THREADS_ENV}='{s}'")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = init_threads(cli.threads).and_then(|_| run(cli));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
