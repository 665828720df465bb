//! Built-in consistency checks on a small instance.
//!
//! Used by `radio-stripe selftest`; a deliberately corrupted error covariance
//! can be injected to confirm the checks actually bite.

use std::fmt;

use serde::Serialize;

use crate::baselines::{centralized_lmmse_l4, StackedChannel};
use crate::channel::{simulate_payload, ChannelEstimateSet, SetupStatistics};
use crate::config::SimulationConfig;
use crate::experiment::{block_rng, setup_scenario};
use crate::linalg::{max_hermitian_skew, quad_form, CMatrix, C64};
use crate::stripe::{run_stripe, PayloadView};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Adds an anti-Hermitian perturbation to one error covariance.
    SkewedErrorCovariance,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<34} worst {:.3e} (tol {:.0e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfTestReport {
    pub checks: Vec<Check>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Worst {
    name: &'static str,
    tolerance: f64,
    worst: f64,
}

impl Worst {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            worst: 0.0,
        }
    }

    fn see(&mut self, v: f64) {
        // a NaN sticks so the check fails
        if v.is_nan() || v > self.worst {
            self.worst = v;
        }
    }

    fn finish(self) -> Check {
        Check {
            name: self.name,
            worst: self.worst,
            tolerance: self.tolerance,
            passed: self.worst <= self.tolerance,
        }
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Runs the checks on setup 0 of `config` over `blocks` coherence blocks.
pub fn run_selftest(
    config: &SimulationConfig,
    blocks: usize,
    fault: Option<Fault>,
) -> Result<SelfTestReport> {
    config.validate()?;
    let scenario = setup_scenario(config, 0)?;
    let powers = config.ue_powers();
    let noise = config.noise_power_w();
    let stats = SetupStatistics::new(&scenario, &powers, noise)?;
    let k_count = config.num_ues;
    let l_count = config.num_aps;

    let rhat = stats.errors.rhat.clone();
    let mut rtilde = stats.errors.rtilde.clone();
    if fault == Some(Fault::SkewedErrorCovariance) {
        let m = &mut rtilde[(0, 0)];
        let bump = C64::new(0.0, 1e-3 * max_abs(m));
        if m.nrows() > 1 {
            // same sign on both sides of the diagonal: not Hermitian
            m[(0, 1)] += bump;
            m[(1, 0)] += bump;
        } else {
            m[(0, 0)] += bump;
        }
    }

    let mut decomposition = Worst::new("covariance decomposition", 1e-10);
    for ((k, l), r) in scenario.covariances.iter() {
        let scale = max_abs(r);
        decomposition.see(max_abs(&(&rhat[(k, l)] + &rtilde[(k, l)] - r)) / scale);
        decomposition.see(max_hermitian_skew(&rtilde[(k, l)]) / scale);
    }

    let mut norms = Worst::new("unit-norm combiners", 1e-12);
    let mut reconstruction = Worst::new("effective gain reconstruction", 1e-10);
    let mut variance = Worst::new("error variance recursion", 1e-12);
    let mut monotone = Worst::new("stage SINR monotone", 1e-9);
    let mut soft = Worst::new("soft estimate decomposition", 1e-10);
    let mut dominance = Worst::new("centralized bound dominates", 1e-12);
    let mut chain = Worst::new("processing chain runs", 0.0);

    for block in 0..blocks {
        let mut rng = block_rng(config.rng_seed, 0, block);
        let (channels, clean) = stats.draw_block(&mut rng);
        let est = ChannelEstimateSet::new(clean.hhat.clone(), rhat.clone(), rtilde.clone());
        let payload = simulate_payload(&channels, &powers, noise, &mut rng);
        let view = PayloadView {
            channels: &channels,
            payload: &payload,
        };
        let (run, l4) = match run_stripe(&est, &powers, noise, Some(view))
            .and_then(|run| Ok((run, centralized_lmmse_l4(&est, &powers, noise)?)))
        {
            Ok(x) => x,
            Err(_) => {
                chain.see(f64::INFINITY);
                continue;
            }
        };
        let last = run.final_state();

        for per_ap in &run.combiners.per_ap {
            for v in per_ap {
                norms.see((v.norm() - 1.0).abs());
            }
        }

        let stacked: Vec<StackedChannel> =
            (0..k_count).map(|i| StackedChannel::new(&est, i)).collect();
        for k in 0..k_count {
            let w = run.combiners.stacked_combiner(k);
            norms.see((w.norm() - 1.0).abs());
            for (i, ch) in stacked.iter().enumerate() {
                let g = w.dotc(&ch.estimate);
                let scale = last
                    .ghat_row(k)
                    .iter()
                    .map(|z| z.norm())
                    .fold(f64::MIN_POSITIVE, f64::max);
                reconstruction.see((g - last.ghat(i, k)).norm() / scale);
                let psi = quad_form(&w, &ch.error_covariance);
                variance.see((psi - last.psi_tilde(i, k)).abs() / psi.abs().max(f64::MIN_POSITIVE));
            }
            for l in 1..l_count {
                let before = run.stages[l - 1].sinr(k, &powers, noise);
                let after = run.stages[l].sinr(k, &powers, noise);
                monotone.see((before - after) / before);
            }
        }

        if let (Some(genie), Some(estimates)) = (&run.genie, &last.soft_estimates) {
            let g = genie.last().expect("one stage per AP");
            for k in 0..k_count {
                let model: C64 = (0..k_count)
                    .map(|i| g.gain[k * k_count + i] * payload.symbols[i])
                    .sum::<C64>()
                    + g.noise[k];
                soft.see((model - estimates[k]).norm() / estimates[k].norm());
            }
        }

        for (k, s) in run.sinr(&powers, noise).iter().enumerate() {
            dominance.see((s - l4[k]) / l4[k]);
        }
    }

    Ok(SelfTestReport {
        checks: vec![
            decomposition.finish(),
            norms.finish(),
            reconstruction.finish(),
            variance.finish(),
            monotone.finish(),
            soft.finish(),
            dominance.finish(),
            chain.finish(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_instance_passes() {
        let report = run_selftest(&SimulationConfig::tiny(), 5, None).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let report = run_selftest(
            &SimulationConfig::tiny(),
            2,
            Some(Fault::SkewedErrorCovariance),
        )
        .unwrap();
        assert!(!report.passed());
        assert!(!report.checks[0].passed);
    }
}
