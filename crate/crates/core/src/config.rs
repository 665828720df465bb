//! Simulation parameters and their TOML representation.
//!
//! The file is split into sections; every key is optional and falls back to
//! the default deployment (24 APs with 4 antennas on a 500 m stripe around a
//! square room, 10 UEs, 200-symbol coherence blocks with 20 pilots).
//!
//! ```toml
//! [network]
//! num_aps = 24
//! antennas_per_ap = 4
//! num_ues = 10
//!
//! [frame]
//! coherence_block = 200
//! pilot_length = 20
//!
//! [radio]
//! ue_power_w = 0.05          # or a per-UE list
//! noise_power_dbm = -92.0
//! carrier_freq_hz = 2e9      # informational
//! bandwidth_hz = 20e6        # informational
//!
//! [geometry]
//! stripe_length_m = 500.0
//! square_side_m = 125.0      # optional, must equal stripe_length_m / 4
//! ap_ue_height_gap_m = 5.0
//!
//! [correlation]
//! model = "gaussian_local_scattering"   # or "uncorrelated"
//! angular_std_dev_deg = 15.0
//!
//! [monte_carlo]
//! num_setups = 50
//! realizations_per_setup = 200
//! seed = 1
//! threads = 0                # 0 = all available cores
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationModel {
    #[serde(alias = "GaussianLocalScattering")]
    GaussianLocalScattering,
    #[serde(alias = "Uncorrelated")]
    Uncorrelated,
}

impl CorrelationModel {
    /// snake_case name, used in sweep labels and file names
    pub fn slug(&self) -> &'static str {
        match self {
            CorrelationModel::GaussianLocalScattering => "gaussian_local_scattering",
            CorrelationModel::Uncorrelated => "uncorrelated",
        }
    }
}

impl fmt::Display for CorrelationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for CorrelationModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace(['_', '-'], "")
            .as_str()
        {
            "gaussianlocalscattering" | "correlated" => {
                Ok(CorrelationModel::GaussianLocalScattering)
            }
            "uncorrelated" => Ok(CorrelationModel::Uncorrelated),
            other => Err(Error::InvalidConfig(format!(
                "unknown correlation model `{other}`"
            ))),
        }
    }
}

/// UE transmit power in watts: one value for everybody or one per UE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UePower {
    Uniform(f64),
    PerUe(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub num_ues: usize,
    pub coherence_block: usize,
    pub pilot_length: usize,
    pub ue_power: UePower,
    pub noise_power_dbm: f64,
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub stripe_length_m: f64,
    /// `None` means stripe_length / 4.
    pub square_side_m: Option<f64>,
    pub ap_ue_height_gap_m: f64,
    pub correlation_model: CorrelationModel,
    pub angular_std_dev_deg: f64,
    pub num_setups: usize,
    pub realizations_per_setup: usize,
    pub rng_seed: u64,
    /// Worker threads for the Monte Carlo driver; 0 uses every core.
    pub threads: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            num_aps: 24,
            antennas_per_ap: 4,
            num_ues: 10,
            coherence_block: 200,
            pilot_length: 20,
            ue_power: UePower::Uniform(0.05),
            noise_power_dbm: -92.0,
            carrier_freq_hz: 2e9,
            bandwidth_hz: 20e6,
            stripe_length_m: 500.0,
            square_side_m: None,
            ap_ue_height_gap_m: 5.0,
            correlation_model: CorrelationModel::GaussianLocalScattering,
            angular_std_dev_deg: 15.0,
            num_setups: 50,
            realizations_per_setup: 200,
            rng_seed: 1,
            threads: 0,
        }
    }
}

impl SimulationConfig {
    /// A deliberately small network for fast checks (3 APs, 2 antennas, 3 UEs
    /// sharing 2 pilots so contamination is exercised).
    pub fn tiny() -> Self {
        Self {
            num_aps: 3,
            antennas_per_ap: 2,
            num_ues: 3,
            pilot_length: 2,
            stripe_length_m: 100.0,
            num_setups: 2,
            realizations_per_setup: 20,
            ..Self::default()
        }
    }

    pub fn square_side(&self) -> f64 {
        self.square_side_m.unwrap_or(self.stripe_length_m / 4.0)
    }

    pub fn noise_power_w(&self) -> f64 {
        10f64.powf(self.noise_power_dbm / 10.0) * 1e-3
    }

    pub fn angular_std_dev_rad(&self) -> f64 {
        self.angular_std_dev_deg.to_radians()
    }

    /// Per-UE transmit powers in watts, length `num_ues`.
    pub fn ue_powers(&self) -> Vec<f64> {
        match &self.ue_power {
            UePower::Uniform(p) => vec![*p; self.num_ues],
            UePower::PerUe(v) => v.clone(),
        }
    }

    /// Fraction of the coherence block carrying payload.
    pub fn prelog(&self) -> f64 {
        1.0 - self.pilot_length as f64 / self.coherence_block as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_aps < 2 {
            return bad(format!("num_aps must be at least 2, got {}", self.num_aps));
        }
        if self.antennas_per_ap == 0 {
            return bad("antennas_per_ap must be positive".into());
        }
        if self.num_ues == 0 {
            return bad("num_ues must be positive".into());
        }
        if self.pilot_length == 0 || self.pilot_length > self.coherence_block {
            return bad(format!(
                "need 1 <= pilot_length <= coherence_block, got {} and {}",
                self.pilot_length, self.coherence_block
            ));
        }
        let powers = self.ue_powers();
        if powers.len() != self.num_ues {
            return bad(format!(
                "ue_power lists {} values for {} UEs",
                powers.len(),
                self.num_ues
            ));
        }
        if powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return bad("every UE power must be positive and finite".into());
        }
        if !self.noise_power_dbm.is_finite() {
            return bad("noise_power_dbm must be finite".into());
        }
        for (name, v) in [
            ("stripe_length_m", self.stripe_length_m),
            ("ap_ue_height_gap_m", self.ap_ue_height_gap_m),
            ("angular_std_dev_deg", self.angular_std_dev_deg),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(side) = self.square_side_m {
            let expected = self.stripe_length_m / 4.0;
            if (side - expected).abs() > 1e-9 * expected {
                return bad(format!(
                    "square_side_m = {side} does not match stripe_length_m / 4 = {expected}"
                ));
            }
        }
        if self.num_setups == 0 || self.realizations_per_setup == 0 {
            return bad("num_setups and realizations_per_setup must be positive".into());
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(s)?;
        let cfg = Self::from(file);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Fully resolved snapshot (derived values written out explicitly).
    pub fn to_toml_string(&self) -> Result<String> {
        let mut resolved = self.clone();
        resolved.square_side_m = Some(self.square_side());
        Ok(toml::to_string(&ConfigFile::from(&resolved))?)
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    network: NetworkSection,
    #[serde(default)]
    frame: FrameSection,
    #[serde(default)]
    radio: RadioSection,
    #[serde(default)]
    geometry: GeometrySection,
    #[serde(default)]
    correlation: CorrelationSection,
    #[serde(default)]
    monte_carlo: MonteCarloSection,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NetworkSection {
    num_aps: usize,
    antennas_per_ap: usize,
    num_ues: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FrameSection {
    coherence_block: usize,
    pilot_length: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RadioSection {
    ue_power_w: UePower,
    noise_power_dbm: f64,
    carrier_freq_hz: f64,
    bandwidth_hz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GeometrySection {
    stripe_length_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    square_side_m: Option<f64>,
    ap_ue_height_gap_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CorrelationSection {
    model: CorrelationModel,
    angular_std_dev_deg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MonteCarloSection {
    num_setups: usize,
    realizations_per_setup: usize,
    seed: u64,
    threads: usize,
}

// Section defaults are projections of `SimulationConfig::default()`.
macro_rules! section_default {
    ($ty:ty, $field:ident) => {
        impl Default for $ty {
            fn default() -> Self {
                ConfigFile::from(&SimulationConfig::default()).$field
            }
        }
    };
}

section_default!(NetworkSection, network);
section_default!(FrameSection, frame);
section_default!(RadioSection, radio);
section_default!(GeometrySection, geometry);
section_default!(CorrelationSection, correlation);
section_default!(MonteCarloSection, monte_carlo);

impl From<&SimulationConfig> for ConfigFile {
    fn from(c: &SimulationConfig) -> Self {
        ConfigFile {
            network: NetworkSection {
                num_aps: c.num_aps,
                antennas_per_ap: c.antennas_per_ap,
                num_ues: c.num_ues,
            },
            frame: FrameSection {
                coherence_block: c.coherence_block,
                pilot_length: c.pilot_length,
            },
            radio: RadioSection {
                ue_power_w: c.ue_power.clone(),
                noise_power_dbm: c.noise_power_dbm,
                carrier_freq_hz: c.carrier_freq_hz,
                bandwidth_hz: c.bandwidth_hz,
            },
            geometry: GeometrySection {
                stripe_length_m: c.stripe_length_m,
                square_side_m: c.square_side_m,
                ap_ue_height_gap_m: c.ap_ue_height_gap_m,
            },
            correlation: CorrelationSection {
                model: c.correlation_model,
                angular_std_dev_deg: c.angular_std_dev_deg,
            },
            monte_carlo: MonteCarloSection {
                num_setups: c.num_setups,
                realizations_per_setup: c.realizations_per_setup,
                seed: c.rng_seed,
                threads: c.threads,
            },
        }
    }
}

impl From<ConfigFile> for SimulationConfig {
    fn from(f: ConfigFile) -> Self {
        SimulationConfig {
            num_aps: f.network.num_aps,
            antennas_per_ap: f.network.antennas_per_ap,
            num_ues: f.network.num_ues,
            coherence_block: f.frame.coherence_block,
            pilot_length: f.frame.pilot_length,
            ue_power: f.radio.ue_power_w,
            noise_power_dbm: f.radio.noise_power_dbm,
            carrier_freq_hz: f.radio.carrier_freq_hz,
            bandwidth_hz: f.radio.bandwidth_hz,
            stripe_length_m: f.geometry.stripe_length_m,
            square_side_m: f.geometry.square_side_m,
            ap_ue_height_gap_m: f.geometry.ap_ue_height_gap_m,
            correlation_model: f.correlation.model,
            angular_std_dev_deg: f.correlation.angular_std_dev_deg,
            num_setups: f.monte_carlo.num_setups,
            realizations_per_setup: f.monte_carlo.realizations_per_setup,
            rng_seed: f.monte_carlo.seed,
            threads: f.monte_carlo.threads,
        }
    }
}
