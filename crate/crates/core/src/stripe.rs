//! Sequential N-LMMSE processing along the stripe, AP 1 -> AP L -> CPU.
//!
//! AP 1 combines its own `N` antennas. Every later AP `l` stacks its
//! received vector with the incoming soft estimate into an `(N + 1)`-dim
//! observation. The augmented channel of UE `i` towards the estimate of
//! UE `k` is `c = [h_il ; g_{i_k (l-1)}]`. Conditioned on the forwarded side
//! information, its mean is `[hhat_il ; ghat_{i_k (l-1)}]` and its error
//! covariance is `bldiag(Rtilde_il, psitilde_{i_k (l-1)})`. The combiner
//! is the normalized LMMSE solution of that conditional model.
//!
//! Indexing convention: every per-pair table in a [`StageState`] is stored
//! row-major by the *served* UE `k`, so `row(k)` gives the `K` effective
//! gains `ghat_{i_k l}` for `i = 0..K` that enter UE `k`'s SINR.

use crate::channel::{ChannelEstimateSet, ChannelRealization, Payload};
use crate::linalg::{block_diag, normalized, quad_form, CMatrix, CVector, HermitianSolver, C64};
use crate::metrics::instantaneous_sinr;
use crate::{Error, Result};

/// What one AP forwards to the next: soft estimates (when a payload is
/// simulated), effective-channel estimates and their error variances.
#[derive(Clone, Debug, PartialEq)]
pub struct StageState {
    num_ues: usize,
    /// `ghat_{i_k l}` at `[k * K + i]`.
    pub ghat: Vec<C64>,
    /// `psitilde_{i_k l}` at `[k * K + i]`.
    pub psi_tilde: Vec<f64>,
    pub soft_estimates: Option<Vec<C64>>,
}

impl StageState {
    /// State carrying no information (`ghat = 0`, `psitilde = 0`).
    pub fn empty(num_ues: usize) -> Self {
        Self {
            num_ues,
            ghat: vec![C64::new(0.0, 0.0); num_ues * num_ues],
            psi_tilde: vec![0.0; num_ues * num_ues],
            soft_estimates: None,
        }
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    /// `ghat_{i_k}`: gain of UE `i` in the estimate of UE `k`.
    pub fn ghat(&self, i: usize, k: usize) -> C64 {
        self.ghat[k * self.num_ues + i]
    }

    pub fn psi_tilde(&self, i: usize, k: usize) -> f64 {
        self.psi_tilde[k * self.num_ues + i]
    }

    pub fn ghat_row(&self, k: usize) -> &[C64] {
        &self.ghat[k * self.num_ues..(k + 1) * self.num_ues]
    }

    pub fn psi_row(&self, k: usize) -> &[f64] {
        &self.psi_tilde[k * self.num_ues..(k + 1) * self.num_ues]
    }

    /// Lemma-style effective SINR of UE `k` from this stage's statistics.
    pub fn sinr(&self, k: usize, powers: &[f64], noise_power: f64) -> f64 {
        instantaneous_sinr(k, self.ghat_row(k), self.psi_row(k), powers, noise_power)
    }

    /// Real scalars of channel side information per block:
    /// `K^2` complex gains plus `K^2` real variances.
    pub fn side_info_real_scalars(&self) -> usize {
        3 * self.num_ues * self.num_ues
    }
}

/// Ground truth tracked next to a [`StageState`] for validation only; never
/// part of the forwarded payload.
#[derive(Clone, Debug, PartialEq)]
pub struct GenieStage {
    /// True effective gains `g_{i_k l}` at `[k * K + i]`.
    pub gain: Vec<C64>,
    /// Effective noise `n_kl`.
    pub noise: Vec<C64>,
}

/// Side information AP `l >= 2` uses to build the combiner for UE `served`.
#[derive(Clone, Debug)]
pub struct AugmentedSideInfo<'a> {
    pub served: usize,
    hhat: Vec<&'a CVector>,
    rtilde: Vec<&'a CMatrix>,
    ghat_prev: Vec<C64>,
    psi_prev: Vec<f64>,
}

impl<'a> AugmentedSideInfo<'a> {
    pub fn num_ues(&self) -> usize {
        self.hhat.len()
    }

    pub fn dim(&self) -> usize {
        self.hhat[0].len() + 1
    }

    /// `chat_{i_k l} = [hhat_il ; ghat_{i_k (l-1)}]`
    pub fn augmented_estimate(&self, i: usize) -> CVector {
        let n = self.hhat[i].len();
        let mut c = CVector::zeros(n + 1);
        c.rows_mut(0, n).copy_from(self.hhat[i]);
        c[n] = self.ghat_prev[i];
        c
    }

    /// `E{c | side info}`, equal to the augmented estimate.
    pub fn conditional_mean(&self, i: usize) -> CVector {
        self.augmented_estimate(i)
    }

    /// `bldiag(Rtilde_il, psitilde_{i_k (l-1)})`
    pub fn error_covariance(&self, i: usize) -> CMatrix {
        let corner = CMatrix::from_element(1, 1, C64::new(self.psi_prev[i], 0.0));
        block_diag([self.rtilde[i], &corner])
    }

    /// `E{c c^H | side info} = chat chat^H + bldiag(Rtilde_il, psitilde)`
    pub fn second_moment(&self, i: usize) -> CMatrix {
        let c = self.augmented_estimate(i);
        &c * c.adjoint() + self.error_covariance(i)
    }
}

/// Collects AP `l`'s side information for serving UE `served`.
pub fn build_augmented_moments<'a>(
    ap: usize,
    served: usize,
    estimates: &'a ChannelEstimateSet,
    previous: &StageState,
) -> AugmentedSideInfo<'a> {
    assert!(ap >= 1, "augmentation starts at the second AP");
    let k_count = estimates.num_ues();
    AugmentedSideInfo {
        served,
        hhat: (0..k_count).map(|i| estimates.hhat(i, ap)).collect(),
        rtilde: (0..k_count).map(|i| estimates.rtilde(i, ap)).collect(),
        ghat_prev: previous.ghat_row(served).to_vec(),
        psi_prev: previous.psi_row(served).to_vec(),
    }
}

fn check_inputs(powers: &[f64], noise_power: f64, num_ues: usize) -> Result<()> {
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
    Ok(())
}

/// N-LMMSE combiners at AP 1:
/// `v_k1 ∝ (sum_i p_i (hhat_i1 hhat_i1^H + Rtilde_i1) + sigma^2 I_N)^{-1} hhat_k1`.
///
/// The matrix does not depend on `k`, so it is factored once.
pub fn combiner_first_ap(
    hhat: &[&CVector],
    rtilde: &[&CMatrix],
    powers: &[f64],
    noise_power: f64,
) -> Result<Vec<CVector>> {
    check_inputs(powers, noise_power, hhat.len())?;
    let n = hhat[0].len();
    let mut b = CMatrix::identity(n, n).scale(noise_power);
    for ((h, r), &p) in hhat.iter().zip(rtilde).zip(powers) {
        b += (*h * h.adjoint() + *r).scale(p);
    }
    let solver = HermitianSolver::new(b, "AP-1 combiner")?;
    Ok(hhat.iter().map(|h| normalized(solver.solve(h))).collect())
}

/// N-LMMSE combiner at AP `l >= 2` for the side information's served UE:
/// `v ∝ (sum_i p_i E{c_i c_i^H} + sigma^2 I_{N+1})^{-1} b_k`.
pub fn combiner_stage(
    side: &AugmentedSideInfo<'_>,
    powers: &[f64],
    noise_power: f64,
) -> Result<CVector> {
    check_inputs(powers, noise_power, side.num_ues())?;
    let d = side.dim();
    let mut b = CMatrix::identity(d, d).scale(noise_power);
    for (i, &p) in powers.iter().enumerate() {
        b += side.second_moment(i).scale(p);
    }
    let solver = HermitianSolver::new(b, "stage combiner")?;
    Ok(normalized(
        solver.solve(&side.conditional_mean(side.served)),
    ))
}

/// Unit-norm combiners: `per_ap[0]` holds `N`-vectors, later APs `(N+1)`-vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinerSet {
    pub per_ap: Vec<Vec<CVector>>,
}

impl CombinerSet {
    pub fn get(&self, k: usize, ap: usize) -> &CVector {
        &self.per_ap[ap][k]
    }

    pub fn num_aps(&self) -> usize {
        self.per_ap.len()
    }

    /// End-to-end weights `w_k` (length `L N`) with `shat_kL = w_k^H [y_1; ...; y_L]`.
    ///
    /// The block for AP `l` is its top `N` entries scaled by the product of the
    /// pass-through coefficients of all later APs.
    pub fn stacked_combiner(&self, k: usize) -> CVector {
        let l_count = self.num_aps();
        let n = self.per_ap[0][k].len();
        let mut w = CVector::zeros(n * l_count);
        let mut carry = C64::new(1.0, 0.0);
        for l in (0..l_count).rev() {
            let v = &self.per_ap[l][k];
            w.rows_mut(l * n, n)
                .copy_from(&v.rows(0, n).map(|x| x * carry));
            if l > 0 {
                carry *= v[n];
            }
        }
        w
    }
}

/// Channel and payload realization driving the genie trace and soft estimates.
#[derive(Clone, Copy, Debug)]
pub struct PayloadView<'a> {
    pub channels: &'a ChannelRealization,
    pub payload: &'a Payload,
}

/// AP 1 update: `ghat_{i_k 1} = v^H hhat_i1`, `psitilde = v^H Rtilde_i1 v`,
/// `shat_k1 = v^H y_1`.
pub fn stage_update_first(
    combiners: &[CVector],
    estimates: &ChannelEstimateSet,
    payload: Option<PayloadView<'_>>,
) -> (StageState, Option<GenieStage>) {
    let k_count = estimates.num_ues();
    let mut state = StageState::empty(k_count);
    for (k, v) in combiners.iter().enumerate() {
        for i in 0..k_count {
            state.ghat[k * k_count + i] = v.dotc(estimates.hhat(i, 0));
            state.psi_tilde[k * k_count + i] = quad_form(v, estimates.rtilde(i, 0)).max(0.0);
        }
    }
    let genie = payload.map(|pv| {
        state.soft_estimates = Some(
            combiners
                .iter()
                .map(|v| v.dotc(&pv.payload.received[0]))
                .collect(),
        );
        GenieStage {
            gain: (0..k_count * k_count)
                .map(|idx| combiners[idx / k_count].dotc(&pv.channels.h[(idx % k_count, 0)]))
                .collect(),
            noise: combiners
                .iter()
                .map(|v| v.dotc(&pv.payload.noise[0]))
                .collect(),
        }
    });
    (state, genie)
}

/// AP `l >= 2` update with augmented combiners `v_kl = [top ; last]`:
/// `ghat_{i_k l} = top^H hhat_il + conj(last) ghat_{i_k (l-1)}` and
/// `psitilde_{i_k l} = top^H Rtilde_il top + |last|^2 psitilde_{i_k (l-1)}`.
pub fn stage_update(
    ap: usize,
    combiners: &[CVector],
    estimates: &ChannelEstimateSet,
    previous: &StageState,
    previous_genie: Option<&GenieStage>,
    payload: Option<PayloadView<'_>>,
) -> (StageState, Option<GenieStage>) {
    let k_count = estimates.num_ues();
    let n = estimates.antennas();
    let mut state = StageState::empty(k_count);
    let mut soft = payload.map(|_| Vec::with_capacity(k_count));
    let mut genie = previous_genie.and(payload).map(|_| GenieStage {
        gain: vec![C64::new(0.0, 0.0); k_count * k_count],
        noise: vec![C64::new(0.0, 0.0); k_count],
    });
    for (k, v) in combiners.iter().enumerate() {
        let top = v.rows(0, n);
        let pass = v[n].conj();
        let pass_energy = v[n].norm_sqr();
        for i in 0..k_count {
            let idx = k * k_count + i;
            state.ghat[idx] = top.dotc(estimates.hhat(i, ap)) + pass * previous.ghat[idx];
            let local = (top.adjoint() * estimates.rtilde(i, ap) * top)[(0, 0)].re;
            state.psi_tilde[idx] = (local + pass_energy * previous.psi_tilde[idx]).max(0.0);
        }
        if let (Some(pv), Some(soft)) = (payload, soft.as_mut()) {
            let prev_soft = previous
                .soft_estimates
                .as_ref()
                .map_or(C64::new(0.0, 0.0), |s| s[k]);
            soft.push(top.dotc(&pv.payload.received[ap]) + pass * prev_soft);
        }
        if let (Some(pv), Some(g), Some(prev)) = (payload, genie.as_mut(), previous_genie) {
            for i in 0..k_count {
                let idx = k * k_count + i;
                g.gain[idx] = top.dotc(&pv.channels.h[(i, ap)]) + pass * prev.gain[idx];
            }
            g.noise[k] = top.dotc(&pv.payload.noise[ap]) + pass * prev.noise[k];
        }
    }
    state.soft_estimates = soft;
    (state, genie)
}

/// Everything one pass along the stripe produced.
#[derive(Clone, Debug)]
pub struct StripeRun {
    /// State leaving each AP; the last one is what the CPU receives.
    pub stages: Vec<StageState>,
    pub combiners: CombinerSet,
    pub genie: Option<Vec<GenieStage>>,
}

impl StripeRun {
    pub fn final_state(&self) -> &StageState {
        self.stages.last().expect("at least one AP")
    }

    /// Effective SINR of every UE at the CPU.
    pub fn sinr(&self, powers: &[f64], noise_power: f64) -> Vec<f64> {
        let s = self.final_state();
        (0..s.num_ues())
            .map(|k| s.sinr(k, powers, noise_power))
            .collect()
    }
}

/// Runs AP 1 through AP L in stripe order.
pub fn run_stripe(
    estimates: &ChannelEstimateSet,
    powers: &[f64],
    noise_power: f64,
    payload: Option<PayloadView<'_>>,
) -> Result<StripeRun> {
    let k_count = estimates.num_ues();
    let l_count = estimates.num_aps();
    check_inputs(powers, noise_power, k_count)?;

    let hhat: Vec<&CVector> = (0..k_count).map(|i| estimates.hhat(i, 0)).collect();
    let rtilde: Vec<&CMatrix> = (0..k_count).map(|i| estimates.rtilde(i, 0)).collect();
    let first = combiner_first_ap(&hhat, &rtilde, powers, noise_power)?;
    let (state, genie) = stage_update_first(&first, estimates, payload);

    let mut stages = Vec::with_capacity(l_count);
    let mut genies = genie.map(|g| {
        let mut v = Vec::with_capacity(l_count);
        v.push(g);
        v
    });
    let mut per_ap = Vec::with_capacity(l_count);
    per_ap.push(first);
    stages.push(state);

    for ap in 1..l_count {
        let previous = stages.last().expect("previous stage");
        let combiners = (0..k_count)
            .map(|k| {
                let side = build_augmented_moments(ap, k, estimates, previous);
                combiner_stage(&side, powers, noise_power)
            })
            .collect::<Result<Vec<_>>>()?;
        let prev_genie = genies.as_ref().and_then(|g| g.last());
        let (state, genie) = stage_update(ap, &combiners, estimates, previous, prev_genie, payload);
        if let (Some(all), Some(g)) = (genies.as_mut(), genie) {
            all.push(g);
        }
        stages.push(state);
        per_ap.push(combiners);
    }

    Ok(StripeRun {
        stages,
        combiners: CombinerSet { per_ap },
        genie: genies,
    })
}
