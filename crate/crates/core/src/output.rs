//! Result files: per-sample SE, CDFs, a JSON summary and the resolved config.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SimulationConfig;
use crate::experiment::ExperimentOutcome;
use crate::metrics::{FronthaulComparison, Scheme};
use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;

pub const SE_FILE: &str = "se.csv";
pub const CDF_FILE: &str = "cdf.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const FRONTHAUL_FILE: &str = "fronthaul.json";
pub const SWEEP_FILE: &str = "sweep.json";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub median_se: f64,
    pub p05_se: f64,
    pub p10_se: f64,
    pub p90_se: f64,
    pub mean_se: f64,
    pub n_samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub num_setups: usize,
    pub realizations_per_setup: usize,
    pub num_ues: usize,
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub rng_seed: u64,
    pub schemes: BTreeMap<Scheme, SchemeSummary>,
    pub fronthaul: FronthaulComparison,
}

pub fn summarize(config: &SimulationConfig, outcome: &ExperimentOutcome) -> Result<Summary> {
    let mut schemes = BTreeMap::new();
    for r in &outcome.results {
        let cdf = r.cdf()?;
        let values = r.values();
        schemes.insert(
            r.scheme,
            SchemeSummary {
                median_se: cdf.median(),
                p05_se: cdf.quantile(0.05),
                p10_se: cdf.quantile(0.10),
                p90_se: cdf.quantile(0.90),
                mean_se: values.iter().sum::<f64>() / values.len() as f64,
                n_samples: values.len(),
            },
        );
    }
    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        num_setups: config.num_setups,
        realizations_per_setup: config.realizations_per_setup,
        num_ues: config.num_ues,
        num_aps: config.num_aps,
        antennas_per_ap: config.antennas_per_ap,
        rng_seed: config.rng_seed,
        schemes,
        fronthaul: outcome.fronthaul,
    })
}

/// Writes `config.toml`, `se.csv`, `cdf.csv` and `summary.json` into `dir`.
pub fn write_run(
    dir: &Path,
    config: &SimulationConfig,
    outcome: &ExperimentOutcome,
) -> Result<Summary> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_FILE), config.to_toml_string()?)?;

    let mut se = fs::File::create(dir.join(SE_FILE))?;
    writeln!(se, "scheme,setup,ue,se_bits_per_hz")?;
    for r in &outcome.results {
        for s in &r.samples {
            writeln!(se, "{},{},{},{:.12e}", r.scheme, s.setup, s.ue, s.se)?;
        }
    }

    let mut cdf_file = fs::File::create(dir.join(CDF_FILE))?;
    writeln!(cdf_file, "scheme,se_bits_per_hz,cdf")?;
    for r in &outcome.results {
        let cdf = r.cdf()?;
        for (v, p) in cdf.values.iter().zip(&cdf.probabilities) {
            writeln!(cdf_file, "{},{:.12e},{:.12e}", r.scheme, v, p)?;
        }
    }

    let summary = summarize(config, outcome)?;
    fs::write(
        dir.join(SUMMARY_FILE),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    Ok(summary)
}

pub fn write_fronthaul(dir: &Path, report: &FronthaulComparison) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(FRONTHAUL_FILE);
    let body = serde_json::json!({ "schema_version": SCHEMA_VERSION, "fronthaul": report });
    fs::write(&path, serde_json::to_string_pretty(&body)? + "\n")?;
    Ok(path)
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub label: String,
    pub directory: String,
    pub schemes: BTreeMap<Scheme, SchemeSummary>,
}

/// Top-level index of a sweep, one entry per sub-directory.
pub fn write_sweep_index(dir: &Path, parameter: &str, points: &[SweepPoint]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let body = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "parameter": parameter,
        "points": points,
    });
    fs::write(
        dir.join(SWEEP_FILE),
        serde_json::to_string_pretty(&body)? + "\n",
    )?;
    Ok(())
}
