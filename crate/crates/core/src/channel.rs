//! Correlated Rayleigh fading, the pilot phase and per-AP MMSE estimation.
//!
//! Everything that depends only on the drop (covariance square roots, the
//! pilot covariances and their factors, the estimator matrices and the
//! estimate / error covariances) is computed once in [`SetupStatistics`];
//! per coherence block only the random draws and matrix-vector products
//! remain.

use std::sync::Arc;

use rand::Rng;
use serde_json::{json, Value};

use crate::linalg::{
    complex_normal_vector, hermitian_part, psd_factor, CMatrix, CVector, HermitianSolver, C64,
};
use crate::scenario::{LinkGrid, PilotAssignment, Scenario};
use crate::{Error, Result};

/// One coherence block of small-scale fading, `h[(k, l)]`.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub h: LinkGrid<CVector>,
}

/// Despread pilot observations `z[t][l]`; `None` for unused pilots.
#[derive(Clone, Debug)]
pub struct PilotObservation {
    pub z: Vec<Option<Vec<CVector>>>,
}

impl PilotObservation {
    pub fn despread(&self, pilot: usize, ap: usize) -> &CVector {
        &self.z[pilot].as_ref().expect("pilot not in use")[ap]
    }
}

/// Estimate and error covariances, constant over a drop.
#[derive(Clone, Debug)]
pub struct ErrorStatistics {
    pub rhat: LinkGrid<CMatrix>,
    pub rtilde: LinkGrid<CMatrix>,
}

#[derive(Clone, Debug)]
pub struct ChannelEstimateSet {
    pub hhat: LinkGrid<CVector>,
    pub stats: Arc<ErrorStatistics>,
}

impl ChannelEstimateSet {
    pub fn new(
        hhat: LinkGrid<CVector>,
        rhat: LinkGrid<CMatrix>,
        rtilde: LinkGrid<CMatrix>,
    ) -> Self {
        Self {
            hhat,
            stats: Arc::new(ErrorStatistics { rhat, rtilde }),
        }
    }

    pub fn num_ues(&self) -> usize {
        self.hhat.num_ues()
    }

    pub fn num_aps(&self) -> usize {
        self.hhat.num_aps()
    }

    pub fn antennas(&self) -> usize {
        self.hhat[(0, 0)].len()
    }

    pub fn hhat(&self, k: usize, l: usize) -> &CVector {
        &self.hhat[(k, l)]
    }

    pub fn rhat(&self, k: usize, l: usize) -> &CMatrix {
        &self.stats.rhat[(k, l)]
    }

    pub fn rtilde(&self, k: usize, l: usize) -> &CMatrix {
        &self.stats.rtilde[(k, l)]
    }

    /// Debug dump: complex numbers as `[re, im]` pairs.
    pub fn to_debug_json(&self) -> Value {
        let vec = |v: &CVector| -> Value { v.iter().map(|z| json!([z.re, z.im])).collect() };
        let mat = |m: &CMatrix| -> Value {
            (0..m.nrows())
                .map(|r| {
                    (0..m.ncols())
                        .map(|c| json!([m[(r, c)].re, m[(r, c)].im]))
                        .collect()
                })
                .collect::<Vec<Value>>()
                .into()
        };
        let links: Vec<Value> = self
            .hhat
            .iter()
            .map(|((k, l), h)| {
                json!({
                    "ue": k,
                    "ap": l,
                    "hhat": vec(h),
                    "rhat": mat(self.rhat(k, l)),
                    "rtilde": mat(self.rtilde(k, l)),
                })
            })
            .collect();
        json!({ "num_ues": self.num_ues(), "num_aps": self.num_aps(), "links": links })
    }
}

/// Draws `h_kl = A_kl w` with `A_kl A_kl^H = R_kl`.
#[derive(Clone, Debug)]
pub struct ChannelSampler {
    factors: LinkGrid<CMatrix>,
}

impl ChannelSampler {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let factors = LinkGrid::try_from_fn(scenario.num_ues(), scenario.num_aps, |k, l| {
            psd_factor(&scenario.covariances[(k, l)])
        })?;
        Ok(Self { factors })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let h = self.factors.map(|a| {
            let w = complex_normal_vector(rng, a.ncols());
            a * w
        });
        ChannelRealization { h }
    }
}

/// One independent channel draw for every (UE, AP) pair.
pub fn draw_channels<R: Rng + ?Sized>(
    scenario: &Scenario,
    rng: &mut R,
) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(scenario)?.draw(rng))
}

/// `Psi = sum_{i in S} tau_p p_i R_il + sigma^2 I` for the UEs on `pilot`.
pub fn pilot_covariance(
    scenario: &Scenario,
    powers: &[f64],
    noise_power: f64,
    pilot: usize,
    ap: usize,
) -> CMatrix {
    let n = scenario.antennas_per_ap;
    let tau_p = scenario.pilots.pilot_length as f64;
    let mut psi = CMatrix::identity(n, n).scale(noise_power);
    for (i, &t) in scenario.pilots.pilot_index.iter().enumerate() {
        if t == pilot {
            psi += scenario.covariances[(i, ap)].scale(tau_p * powers[i]);
        }
    }
    psi
}

/// Pilot phase in the despread domain:
/// `z_tl = sum_{i on pilot t} sqrt(p_i tau_p) h_il + n_tl`, `n_tl ~ CN(0, sigma^2 I)`.
pub fn simulate_pilot_phase<R: Rng + ?Sized>(
    pilots: &PilotAssignment,
    powers: &[f64],
    noise_power: f64,
    channels: &ChannelRealization,
    rng: &mut R,
) -> PilotObservation {
    let num_aps = channels.h.num_aps();
    let n = channels.h[(0, 0)].len();
    let tau_p = pilots.pilot_length as f64;
    let noise_std = noise_power.sqrt();
    let mut z: Vec<Option<Vec<CVector>>> = vec![None; pilots.pilot_length];
    for t in pilots.used_pilots() {
        let per_ap = (0..num_aps)
            .map(|l| {
                let mut zt = complex_normal_vector(rng, n).scale(noise_std);
                for (i, &ti) in pilots.pilot_index.iter().enumerate() {
                    if ti == t {
                        zt += channels.h[(i, l)].scale((powers[i] * tau_p).sqrt());
                    }
                }
                zt
            })
            .collect();
        z[t] = Some(per_ap);
    }
    PilotObservation { z }
}

/// Drop-constant quantities for channel generation and MMSE estimation.
#[derive(Clone, Debug)]
pub struct SetupStatistics {
    pub powers: Vec<f64>,
    pub noise_power: f64,
    pub pilots: PilotAssignment,
    pub sampler: ChannelSampler,
    /// Cholesky factors of `Psi_tl`, indexed `[t * L + l]`.
    psi_solvers: Vec<Option<HermitianSolver>>,
    /// `sqrt(p_k tau_p) R_kl Psi^{-1}`
    estimator: LinkGrid<CMatrix>,
    pub errors: Arc<ErrorStatistics>,
    num_aps: usize,
}

impl SetupStatistics {
    pub fn new(scenario: &Scenario, powers: &[f64], noise_power: f64) -> Result<Self> {
        let num_aps = scenario.num_aps;
        let num_ues = scenario.num_ues();
        if powers.len() != num_ues {
            return Err(Error::InvalidConfig(format!(
                "{} powers for {} UEs",
                powers.len(),
                num_ues
            )));
        }
        if !(noise_power > 0.0) {
            return Err(Error::InvalidConfig("noise power must be positive".into()));
        }
        let pilots = scenario.pilots.clone();
        let tau_p = pilots.pilot_length as f64;
        let mut psi_solvers = vec![None; pilots.pilot_length * num_aps];
        for t in pilots.used_pilots() {
            for l in 0..num_aps {
                let psi = pilot_covariance(scenario, powers, noise_power, t, l);
                psi_solvers[t * num_aps + l] = Some(HermitianSolver::new(psi, "pilot covariance")?);
            }
        }

        let mut rhat = Vec::with_capacity(num_ues * num_aps);
        let mut rtilde = Vec::with_capacity(num_ues * num_aps);
        let mut estimator = Vec::with_capacity(num_ues * num_aps);
        for k in 0..num_ues {
            let t = pilots.pilot_index[k];
            let gain = (powers[k] * tau_p).sqrt();
            for l in 0..num_aps {
                let r = &scenario.covariances[(k, l)];
                let solver = psi_solvers[t * num_aps + l].as_ref().expect("pilot in use");
                // X = Psi^{-1} R, so R Psi^{-1} = X^H and R Psi^{-1} R = X^H R = R X.
                let x = solver.solve_matrix(r);
                let rh = hermitian_part(&(r * &x).scale(gain * gain));
                let rt = hermitian_part(&(r - &rh));
                estimator.push(x.adjoint().scale(gain));
                rhat.push(rh);
                rtilde.push(rt);
            }
        }
        let grid = |v: Vec<CMatrix>| {
            let mut it = v.into_iter();
            LinkGrid::from_fn(num_ues, num_aps, |_, _| it.next().unwrap())
        };

        Ok(Self {
            powers: powers.to_vec(),
            noise_power,
            pilots,
            sampler: ChannelSampler::new(scenario)?,
            psi_solvers,
            estimator: grid(estimator),
            errors: Arc::new(ErrorStatistics {
                rhat: grid(rhat),
                rtilde: grid(rtilde),
            }),
            num_aps,
        })
    }

    pub fn psi_solver(&self, pilot: usize, ap: usize) -> &HermitianSolver {
        self.psi_solvers[pilot * self.num_aps + ap]
            .as_ref()
            .expect("pilot not in use")
    }

    /// Draws channels, runs the pilot phase and estimates, in that RNG order.
    pub fn draw_block<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> (ChannelRealization, ChannelEstimateSet) {
        let channels = self.sampler.draw(rng);
        let obs =
            simulate_pilot_phase(&self.pilots, &self.powers, self.noise_power, &channels, rng);
        let est = mmse_estimate(self, &obs);
        (channels, est)
    }
}

/// `hhat_kl = sqrt(p_k tau_p) R_kl Psi_{t_k l}^{-1} z_{t_k l}` for every pair.
pub fn mmse_estimate(stats: &SetupStatistics, obs: &PilotObservation) -> ChannelEstimateSet {
    let hhat = LinkGrid::from_fn(stats.pilots.num_ues(), stats.num_aps, |k, l| {
        let t = stats.pilots.pilot_index[k];
        &stats.estimator[(k, l)] * obs.despread(t, l)
    });
    ChannelEstimateSet {
        hhat,
        stats: Arc::clone(&stats.errors),
    }
}

/// Payload symbols, receiver noise and received signals for one channel use.
#[derive(Clone, Debug)]
pub struct Payload {
    pub symbols: Vec<C64>,
    pub noise: Vec<CVector>,
    pub received: Vec<CVector>,
}

/// `y_l = sum_i h_il s_i + n_l` with `s_i ~ CN(0, p_i)`, `n_l ~ CN(0, sigma^2 I)`.
pub fn simulate_payload<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    powers: &[f64],
    noise_power: f64,
    rng: &mut R,
) -> Payload {
    let num_aps = channels.h.num_aps();
    let n = channels.h[(0, 0)].len();
    let symbols: Vec<C64> = powers
        .iter()
        .map(|&p| crate::linalg::complex_normal(rng) * p.sqrt())
        .collect();
    let noise: Vec<CVector> = (0..num_aps)
        .map(|_| complex_normal_vector(rng, n).scale(noise_power.sqrt()))
        .collect();
    let received = (0..num_aps)
        .map(|l| {
            let mut y = noise[l].clone();
            for (i, s) in symbols.iter().enumerate() {
                y += &channels.h[(i, l)] * *s;
            }
            y
        })
        .collect();
    Payload {
        symbols,
        noise,
        received,
    }
}
