//! Monte Carlo driver: setups, coherence blocks and parameter sweeps.
//!
//! Every setup and every coherence block draws from its own ChaCha stream,
//! keyed on `(setup << 32) | block`, so results do not depend on the number
//! of worker threads or on which schemes are evaluated.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::baselines::{centralized_lmmse_l4, mr_l2_uatf_sinr};
use crate::channel::SetupStatistics;
use crate::config::{CorrelationModel, SimulationConfig};
use crate::metrics::{prelog, FronthaulComparison, FronthaulDims, Scheme, SeResult, SeSample};
use crate::scenario::{build_scenario, Scenario};
use crate::stripe::run_stripe;
use crate::{Error, Result};

const SCENARIO_STREAM: u64 = 0xFFFF_FFFF;

/// RNG for the drop itself (UE positions, pilot assignment).
pub fn scenario_rng(seed: u64, setup: usize) -> ChaCha8Rng {
    stream_rng(seed, setup, SCENARIO_STREAM)
}

/// RNG for one coherence block of one setup.
pub fn block_rng(seed: u64, setup: usize, block: usize) -> ChaCha8Rng {
    stream_rng(seed, setup, block as u64)
}

fn stream_rng(seed: u64, setup: usize, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((setup as u64) << 32) | (block & 0xFFFF_FFFF));
    rng
}

/// Drop `setup` of the configured experiment.
pub fn setup_scenario(config: &SimulationConfig, setup: usize) -> Result<Scenario> {
    build_scenario(config, &mut scenario_rng(config.rng_seed, setup))
}

/// Per-UE SE of each requested scheme for one setup, in the order of `schemes`.
pub fn simulate_setup(
    config: &SimulationConfig,
    setup: usize,
    schemes: &[Scheme],
) -> Result<Vec<Vec<f64>>> {
    let scenario = setup_scenario(config, setup)?;
    let powers = config.ue_powers();
    let noise = config.noise_power_w();
    let stats = SetupStatistics::new(&scenario, &powers, noise)?;
    let k_count = config.num_ues;
    let pre = prelog(config.coherence_block, config.pilot_length);

    let wants = |s: Scheme| schemes.contains(&s);
    let per_block = wants(Scheme::StripeNlmmse) || wants(Scheme::LmmseL4);
    let mut stripe_rate = vec![0.0; k_count];
    let mut l4_rate = vec![0.0; k_count];
    if per_block {
        for block in 0..config.realizations_per_setup {
            let mut rng = block_rng(config.rng_seed, setup, block);
            let (_, est) = stats.draw_block(&mut rng);
            if wants(Scheme::StripeNlmmse) {
                let sinr = run_stripe(&est, &powers, noise, None)?.sinr(&powers, noise);
                for (acc, s) in stripe_rate.iter_mut().zip(sinr) {
                    *acc += (1.0 + s).log2();
                }
            }
            if wants(Scheme::LmmseL4) {
                let sinr = centralized_lmmse_l4(&est, &powers, noise)?;
                for (acc, s) in l4_rate.iter_mut().zip(sinr) {
                    *acc += (1.0 + s).log2();
                }
            }
        }
    }
    let blocks = config.realizations_per_setup as f64;
    Ok(schemes
        .iter()
        .map(|scheme| match scheme {
            Scheme::StripeNlmmse => stripe_rate.iter().map(|r| pre * r / blocks).collect(),
            Scheme::LmmseL4 => l4_rate.iter().map(|r| pre * r / blocks).collect(),
            Scheme::MrL2 => mr_l2_uatf_sinr(&scenario, &stats)
                .into_iter()
                .map(|s| pre * (1.0 + s).log2())
                .collect(),
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutcome {
    pub results: Vec<SeResult>,
    pub fronthaul: FronthaulComparison,
}

impl ExperimentOutcome {
    pub fn result(&self, scheme: Scheme) -> Option<&SeResult> {
        self.results.iter().find(|r| r.scheme == scheme)
    }
}

pub fn fronthaul_dims(config: &SimulationConfig) -> FronthaulDims {
    FronthaulDims {
        antennas_per_ap: config.antennas_per_ap as u64,
        num_aps: config.num_aps as u64,
        num_ues: config.num_ues as u64,
        coherence_block: config.coherence_block as u64,
        pilot_length: config.pilot_length as u64,
    }
}

/// Runs every setup and collects one SE sample per (setup, UE) and scheme.
pub fn run_experiment(config: &SimulationConfig, schemes: &[Scheme]) -> Result<ExperimentOutcome> {
    config.validate()?;
    if schemes.is_empty() {
        return Err(Error::InvalidConfig("no schemes selected".into()));
    }
    let mut schemes = schemes.to_vec();
    schemes.sort();
    schemes.dedup();

    let per_setup = map_setups(config, &schemes)?;

    let results = schemes
        .iter()
        .enumerate()
        .map(|(j, &scheme)| SeResult {
            scheme,
            samples: per_setup
                .iter()
                .enumerate()
                .flat_map(|(setup, by_scheme)| {
                    by_scheme[j]
                        .iter()
                        .enumerate()
                        .map(move |(ue, &se)| SeSample { setup, ue, se })
                })
                .collect(),
        })
        .collect();
    Ok(ExperimentOutcome {
        results,
        fronthaul: FronthaulComparison::new(fronthaul_dims(config)),
    })
}

#[cfg(feature = "parallel")]
fn map_setups(config: &SimulationConfig, schemes: &[Scheme]) -> Result<Vec<Vec<Vec<f64>>>> {
    use rayon::prelude::*;
    let work = || {
        (0..config.num_setups)
            .into_par_iter()
            .map(|s| simulate_setup(config, s, schemes))
            .collect::<Result<Vec<_>>>()
    };
    if config.threads == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work)
    }
}

#[cfg(not(feature = "parallel"))]
fn map_setups(config: &SimulationConfig, schemes: &[Scheme]) -> Result<Vec<Vec<Vec<f64>>>> {
    (0..config.num_setups)
        .map(|s| simulate_setup(config, s, schemes))
        .collect()
}

/// One-parameter sweep over the base configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    NumUes(Vec<usize>),
    Correlation(Vec<CorrelationModel>),
}

impl Sweep {
    pub fn parameter(&self) -> &'static str {
        match self {
            Sweep::NumUes(_) => "k",
            Sweep::Correlation(_) => "correlation_model",
        }
    }

    /// `(label, config)` per sweep point; labels double as directory names.
    pub fn expand(&self, base: &SimulationConfig) -> Result<Vec<(String, SimulationConfig)>> {
        let points: Vec<(String, SimulationConfig)> = match self {
            Sweep::NumUes(ks) => ks
                .iter()
                .map(|&k| {
                    let cfg = SimulationConfig {
                        num_ues: k,
                        ..base.clone()
                    };
                    (format!("k={k}"), cfg)
                })
                .collect(),
            Sweep::Correlation(models) => models
                .iter()
                .map(|&m| {
                    let cfg = SimulationConfig {
                        correlation_model: m,
                        ..base.clone()
                    };
                    (format!("correlation_model={}", m.slug()), cfg)
                })
                .collect(),
        };
        for (_, cfg) in &points {
            cfg.validate()?;
        }
        Ok(points)
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let values: Vec<String> = match self {
            Sweep::NumUes(v) => v.iter().map(|x| x.to_string()).collect(),
            Sweep::Correlation(v) => v.iter().map(|x| x.slug().to_string()).collect(),
        };
        write!(f, "{}={}", self.parameter(), values.join(","))
    }
}

impl FromStr for Sweep {
    type Err = Error;

    /// `k=5,10,15` (alias `num_ues`) or `correlation_model=uncorrelated,gaussian_local_scattering`.
    fn from_str(s: &str) -> Result<Self> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidSweep(format!("expected `name=v1,v2,...`, got `{s}`")))?;
        let values: Vec<&str> = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(Error::InvalidSweep(format!("no values in `{s}`")));
        }
        match key.trim() {
            "k" | "K" | "num_ues" => values
                .iter()
                .map(|v| {
                    v.parse::<usize>()
                        .map_err(|_| Error::InvalidSweep(format!("`{v}` is not a UE count")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Sweep::NumUes),
            "correlation_model" | "correlation" => values
                .iter()
                .map(|v| {
                    v.parse::<CorrelationModel>()
                        .map_err(|e| Error::InvalidSweep(e.to_string()))
                })
                .collect::<Result<Vec<_>>>()
                .map(Sweep::Correlation),
            other => Err(Error::InvalidSweep(format!("cannot sweep `{other}`"))),
        }
    }
}
