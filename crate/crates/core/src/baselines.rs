//! Reference receivers: centralized LMMSE on the stacked channel (L4) and
//! local MR with equal-weight fusion at the CPU (L2).

use crate::channel::{ChannelEstimateSet, ChannelRealization, SetupStatistics};
use crate::linalg::{
    block_diag, normalized, quad_form, trace_re, CMatrix, CVector, HermitianSolver, C64,
};
use crate::metrics::instantaneous_sinr;
use crate::scenario::Scenario;
use crate::{Error, Result};

/// All APs' estimates of one UE stacked into an `L N` vector, with the
/// block-diagonal error covariance that goes with it.
#[derive(Clone, Debug)]
pub struct StackedChannel {
    pub estimate: CVector,
    pub error_covariance: CMatrix,
}

impl StackedChannel {
    pub fn new(est: &ChannelEstimateSet, k: usize) -> Self {
        let l_count = est.num_aps();
        let n = est.antennas();
        let estimate = CVector::from_iterator(
            n * l_count,
            (0..l_count).flat_map(|l| est.hhat(k, l).iter().copied()),
        );
        let error_covariance = block_diag((0..l_count).map(|l| est.rtilde(k, l)));
        Self {
            estimate,
            error_covariance,
        }
    }
}

fn stacked_error_quad(est: &ChannelEstimateSet, i: usize, v: &CVector) -> f64 {
    let n = est.antennas();
    (0..est.num_aps())
        .map(|l| {
            let block = v.rows(l * n, n).into_owned();
            quad_form(&block, est.rtilde(i, l))
        })
        .sum()
}

/// Unit-norm centralized LMMSE combiners
/// `v_k ∝ (sum_i p_i (hhat_i hhat_i^H + bldiag(Rtilde_i)) + sigma^2 I)^{-1} hhat_k`.
pub fn l4_combiners(
    est: &ChannelEstimateSet,
    powers: &[f64],
    noise_power: f64,
) -> Result<Vec<CVector>> {
    let k_count = est.num_ues();
    if powers.len() != k_count {
        return Err(Error::InvalidConfig(format!(
            "{} powers for {} UEs",
            powers.len(),
            k_count
        )));
    }
    let n = est.antennas();
    let dim = n * est.num_aps();
    let stacked: Vec<CVector> = (0..k_count)
        .map(|k| {
            CVector::from_iterator(
                dim,
                (0..est.num_aps()).flat_map(|l| est.hhat(k, l).iter().copied()),
            )
        })
        .collect();
    let mut b = CMatrix::identity(dim, dim).scale(noise_power);
    for (i, h) in stacked.iter().enumerate() {
        b.gerc(C64::new(powers[i], 0.0), h, h, C64::new(1.0, 0.0));
        for l in 0..est.num_aps() {
            let mut block = b.view_mut((l * n, l * n), (n, n));
            block += est.rtilde(i, l).scale(powers[i]);
        }
    }
    let solver = HermitianSolver::new(b, "centralized LMMSE")?;
    Ok(stacked
        .iter()
        .map(|h| normalized(solver.solve(h)))
        .collect())
}

/// Per-UE SINR of centralized LMMSE under the same conditional-SINR template
/// the stripe uses: `ghat_i = v^H hhat_i`, `psitilde_i = v^H bldiag(Rtilde_i) v`.
pub fn centralized_lmmse_l4(
    est: &ChannelEstimateSet,
    powers: &[f64],
    noise_power: f64,
) -> Result<Vec<f64>> {
    let combiners = l4_combiners(est, powers, noise_power)?;
    Ok(combiners
        .iter()
        .enumerate()
        .map(|(k, v)| sinr_of_stacked_combiner(est, k, v, powers, noise_power))
        .collect())
}

/// Conditional SINR of UE `k` for any stacked combiner `v` (normalized here).
pub fn sinr_of_stacked_combiner(
    est: &ChannelEstimateSet,
    k: usize,
    v: &CVector,
    powers: &[f64],
    noise_power: f64,
) -> f64 {
    let v = normalized(v.clone());
    let n = est.antennas();
    let k_count = est.num_ues();
    let ghat: Vec<C64> = (0..k_count)
        .map(|i| {
            (0..est.num_aps())
                .map(|l| v.rows(l * n, n).dotc(est.hhat(i, l)))
                .sum()
        })
        .collect();
    let psi: Vec<f64> = (0..k_count)
        .map(|i| stacked_error_quad(est, i, &v))
        .collect();
    instantaneous_sinr(k, &ghat, &psi, powers, noise_power)
}

/// Local MR soft estimates `hhat_kl^H y_l`, averaged over the APs.
pub fn mr_fuse(est: &ChannelEstimateSet, received: &[CVector]) -> Vec<C64> {
    let l_count = est.num_aps() as f64;
    (0..est.num_ues())
        .map(|k| {
            received
                .iter()
                .enumerate()
                .map(|(l, y)| est.hhat(k, l).dotc(y))
                .sum::<C64>()
                / l_count
        })
        .collect()
}

/// Use-and-then-forget SINR of distributed MR with equal-weight fusion,
/// with every expectation in closed form for MMSE estimates:
///
/// - `E{v_k^H h_k} = E{||v_k||^2} = sum_l tr(Rhat_kl)`
/// - `E{|v_k^H h_i|^2} = sum_l tr(Rhat_kl R_il) + [i in S_k] |sum_l tau_p sqrt(p_k p_i) tr(Psi_l^{-1} R_kl R_il)|^2`
pub fn mr_l2_uatf_sinr(scenario: &Scenario, stats: &SetupStatistics) -> Vec<f64> {
    let k_count = scenario.num_ues();
    let l_count = scenario.num_aps;
    let powers = &stats.powers;
    let tau_p = stats.pilots.pilot_length as f64;

    // Psi^{-1} R_kl, reused across interferers.
    let psi_inv_r: Vec<Vec<CMatrix>> = (0..k_count)
        .map(|k| {
            let t = stats.pilots.pilot_index[k];
            (0..l_count)
                .map(|l| {
                    stats
                        .psi_solver(t, l)
                        .solve_matrix(&scenario.covariances[(k, l)])
                })
                .collect()
        })
        .collect();

    (0..k_count)
        .map(|k| {
            let signal: f64 = (0..l_count)
                .map(|l| trace_re(&stats.errors.rhat[(k, l)]))
                .sum();
            let mut denom = noise_free_sum(k, scenario, stats, &psi_inv_r, tau_p);
            denom -= powers[k] * signal * signal;
            denom += stats.noise_power * signal;
            powers[k] * signal * signal / denom
        })
        .collect()
}

fn noise_free_sum(
    k: usize,
    scenario: &Scenario,
    stats: &SetupStatistics,
    psi_inv_r: &[Vec<CMatrix>],
    tau_p: f64,
) -> f64 {
    let powers = &stats.powers;
    let l_count = scenario.num_aps;
    (0..scenario.num_ues())
        .map(|i| {
            let mut second = 0.0;
            for l in 0..l_count {
                second += (&stats.errors.rhat[(k, l)] * &scenario.covariances[(i, l)])
                    .trace()
                    .re;
            }
            if stats.pilots.shares_pilot(i, k) {
                let mean: C64 = (0..l_count)
                    .map(|l| (&psi_inv_r[k][l] * &scenario.covariances[(i, l)]).trace())
                    .sum::<C64>()
                    * (tau_p * (powers[k] * powers[i]).sqrt());
                second += mean.norm_sqr();
            }
            powers[i] * second
        })
        .sum()
}

/// Sample-average version of the MR use-and-then-forget bound, accumulated
/// block by block from estimates and true channels.
#[derive(Clone, Debug)]
pub struct MrUatfAccumulator {
    num_ues: usize,
    blocks: usize,
    /// sum of `v_k^H h_k`
    gain: Vec<C64>,
    /// sum of `|v_k^H h_i|^2` at `[k * K + i]`
    power: Vec<f64>,
    /// sum of `||v_k||^2`
    norm: Vec<f64>,
}

impl MrUatfAccumulator {
    pub fn new(num_ues: usize) -> Self {
        Self {
            num_ues,
            blocks: 0,
            gain: vec![C64::new(0.0, 0.0); num_ues],
            power: vec![0.0; num_ues * num_ues],
            norm: vec![0.0; num_ues],
        }
    }

    pub fn add_block(&mut self, est: &ChannelEstimateSet, channels: &ChannelRealization) {
        let k_count = self.num_ues;
        for k in 0..k_count {
            for i in 0..k_count {
                let inner: C64 = (0..est.num_aps())
                    .map(|l| est.hhat(k, l).dotc(&channels.h[(i, l)]))
                    .sum();
                self.power[k * k_count + i] += inner.norm_sqr();
                if i == k {
                    self.gain[k] += inner;
                }
            }
            self.norm[k] += (0..est.num_aps())
                .map(|l| est.hhat(k, l).norm_squared())
                .sum::<f64>();
        }
        self.blocks += 1;
    }

    pub fn sinr(&self, powers: &[f64], noise_power: f64) -> Vec<f64> {
        let n = self.blocks.max(1) as f64;
        let k_count = self.num_ues;
        (0..k_count)
            .map(|k| {
                let mean_gain = self.gain[k] / n;
                let signal = powers[k] * mean_gain.norm_sqr();
                let total: f64 = (0..k_count)
                    .map(|i| powers[i] * self.power[k * k_count + i] / n)
                    .sum();
                signal / (total - signal + noise_power * self.norm[k] / n)
            })
            .collect()
    }
}
