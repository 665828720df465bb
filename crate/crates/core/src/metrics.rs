//! SINR / spectral efficiency, empirical CDFs and front-haul accounting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::C64;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Sequential N-LMMSE along the radio stripe.
    StripeNlmmse,
    /// Local MR with equal-weight fusion at the CPU (level 2).
    MrL2,
    /// Fully centralized LMMSE (level 4).
    LmmseL4,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::StripeNlmmse, Scheme::MrL2, Scheme::LmmseL4];

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::StripeNlmmse => "stripe_nlmmse",
            Scheme::MrL2 => "mr_l2",
            Scheme::LmmseL4 => "lmmse_l4",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.label() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scheme `{s}`")))
    }
}

/// Effective SINR of UE `k` from forwarded effective-channel statistics:
///
/// `p_k |ghat_k|^2 / (sum_{i != k} p_i |ghat_i|^2 + sum_i p_i psitilde_i + sigma^2)`
///
/// where `ghat[i]` and `psi_tilde[i]` describe UE `i`'s contribution to the
/// estimate of UE `k`.
pub fn instantaneous_sinr(
    k: usize,
    ghat: &[C64],
    psi_tilde: &[f64],
    powers: &[f64],
    noise_power: f64,
) -> f64 {
    let mut interference = noise_power;
    for (i, ((g, psi), p)) in ghat.iter().zip(psi_tilde).zip(powers).enumerate() {
        if i != k {
            interference += p * g.norm_sqr();
        }
        interference += p * psi;
    }
    powers[k] * ghat[k].norm_sqr() / interference
}

pub fn prelog(coherence_block: usize, pilot_length: usize) -> f64 {
    1.0 - pilot_length as f64 / coherence_block as f64
}

/// `(1 - tau_p / tau_c) * mean(log2(1 + SINR))` over the given realizations.
pub fn spectral_efficiency(
    sinr_samples: &[f64],
    coherence_block: usize,
    pilot_length: usize,
) -> f64 {
    assert!(!sinr_samples.is_empty(), "need at least one SINR sample");
    let mean =
        sinr_samples.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / sinr_samples.len() as f64;
    prelog(coherence_block, pilot_length) * mean
}

/// SE samples for one scheme, one per (setup, UE).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeResult {
    pub scheme: Scheme,
    /// `(setup, ue, se)` in setup-major order.
    pub samples: Vec<SeSample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeSample {
    pub setup: usize,
    pub ue: usize,
    pub se: f64,
}

impl SeResult {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.se).collect()
    }

    pub fn cdf(&self) -> Result<CdfSeries> {
        empirical_cdf(&self.values())
    }
}

/// Empirical distribution function as sorted values with cumulative
/// probabilities `i / n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfSeries {
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl CdfSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Quantile with linear interpolation between order statistics,
    /// at fractional rank `p * (n - 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.values.len();
        let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let frac = h - lo as f64;
        self.values[lo] + frac * (self.values[hi] - self.values[lo])
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

pub fn empirical_cdf(samples: &[f64]) -> Result<CdfSeries> {
    if samples.is_empty() {
        return Err(Error::InvalidSamples("empty sample set".into()));
    }
    if let Some(bad) = samples.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidSamples(format!("non-finite sample {bad}")));
    }
    let mut values = samples.to_vec();
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let probabilities = (1..=values.len()).map(|i| i as f64 / n).collect();
    Ok(CdfSeries {
        values,
        probabilities,
    })
}

/// Real-valued scalars per coherence block on the front-haul.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FronthaulReport {
    pub scheme: Scheme,
    /// Load on every stripe segment (`None` for star-connected L4).
    pub real_scalars_per_block_per_segment: Option<u64>,
    pub real_scalars_to_cpu_per_block: u64,
    pub reduction_vs_l4: f64,
}

/// Network dimensions the front-haul counts depend on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FronthaulDims {
    pub antennas_per_ap: u64,
    pub num_aps: u64,
    pub num_ues: u64,
    pub coherence_block: u64,
    pub pilot_length: u64,
}

/// L4 ships every received sample: `2 N L tau_c`.
pub fn l4_scalars(d: FronthaulDims) -> u64 {
    2 * d.antennas_per_ap * d.num_aps * d.coherence_block
}

/// The stripe ships `3 K^2` side-information scalars plus `K` complex soft
/// estimates per payload symbol on every segment: `3 K^2 + 2 K (tau_c - tau_p)`.
pub fn stripe_scalars(d: FronthaulDims) -> u64 {
    3 * d.num_ues * d.num_ues + 2 * d.num_ues * (d.coherence_block - d.pilot_length)
}

pub fn fronthaul_load(scheme: Scheme, d: FronthaulDims) -> Option<FronthaulReport> {
    let l4 = l4_scalars(d);
    let (per_segment, to_cpu) = match scheme {
        Scheme::LmmseL4 => (None, l4),
        Scheme::StripeNlmmse => {
            let s = stripe_scalars(d);
            (Some(s), s)
        }
        Scheme::MrL2 => return None,
    };
    Some(FronthaulReport {
        scheme,
        real_scalars_per_block_per_segment: per_segment,
        real_scalars_to_cpu_per_block: to_cpu,
        reduction_vs_l4: 1.0 - to_cpu as f64 / l4 as f64,
    })
}

/// Both front-haul reports in the shape the JSON summary uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FronthaulComparison {
    pub l4: u64,
    pub stripe: u64,
    pub reduction: f64,
}

impl FronthaulComparison {
    pub fn new(d: FronthaulDims) -> Self {
        let l4 = l4_scalars(d);
        let stripe = stripe_scalars(d);
        Self {
            l4,
            stripe,
            reduction: 1.0 - stripe as f64 / l4 as f64,
        }
    }
}
