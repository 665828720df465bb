//! Monte Carlo checks of the fading, estimation and stripe statistics.

use radio_stripe::channel::{simulate_payload, SetupStatistics};
use radio_stripe::experiment::{block_rng, setup_scenario};
use radio_stripe::linalg::{CMatrix, C64};
use radio_stripe::stripe::{run_stripe, PayloadView};
use radio_stripe::SimulationConfig;

fn small() -> (
    SimulationConfig,
    SetupStatistics,
    radio_stripe::scenario::Scenario,
) {
    let cfg = SimulationConfig {
        num_aps: 4,
        num_ues: 4,
        pilot_length: 2,
        stripe_length_m: 160.0,
        ..SimulationConfig::default()
    };
    let sc = setup_scenario(&cfg, 0).unwrap();
    let stats = SetupStatistics::new(&sc, &cfg.ue_powers(), cfg.noise_power_w()).unwrap();
    (cfg, stats, sc)
}

fn rel_err(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn sample_covariances_match_model() {
    let (cfg, stats, sc) = small();
    let trials = 50_000;
    let n = cfg.antennas_per_ap;
    let (k, l) = (1, 2);
    let mut cov_h = CMatrix::zeros(n, n);
    let mut cov_hhat = CMatrix::zeros(n, n);
    let mut cross = CMatrix::zeros(n, n);
    for b in 0..trials {
        let (ch, est) = stats.draw_block(&mut block_rng(5, 0, b));
        let h = &ch.h[(k, l)];
        let hh = est.hhat(k, l);
        let err = h - hh;
        cov_h += h * h.adjoint();
        cov_hhat += hh * hh.adjoint();
        cross += &err * hh.adjoint();
    }
    let m = trials as f64;
    let r = &sc.covariances[(k, l)];
    assert!(rel_err(&cov_h.unscale(m), r) < 0.02);
    assert!(rel_err(&cov_hhat.unscale(m), &stats.errors.rhat[(k, l)]) < 0.02);
    // estimate and error are uncorrelated: every entry of E{e hhat^H} is
    // within 4 standard errors of zero
    let cross = cross.unscale(m);
    for a in 0..n {
        for c in 0..n {
            let sd =
                (stats.errors.rtilde[(k, l)][(a, a)].re * stats.errors.rhat[(k, l)][(c, c)].re / m)
                    .sqrt();
            assert!(
                cross[(a, c)].norm() < 4.0 * sd,
                "({a},{c}) {} vs sd {sd}",
                cross[(a, c)]
            );
        }
    }
}

#[test]
fn copilot_estimates_are_correlated() {
    let (_, stats, _) = small();
    let pilots = &stats.pilots;
    let (k, i) = (0..4)
        .flat_map(|k| (0..4).map(move |i| (k, i)))
        .find(|&(k, i)| k != i && pilots.shares_pilot(k, i))
        .expect("4 UEs on 2 pilots share");
    let mut corr = C64::new(0.0, 0.0);
    let mut pk = 0.0;
    let mut pi = 0.0;
    for b in 0..5_000 {
        let (_, est) = stats.draw_block(&mut block_rng(6, 0, b));
        corr += est.hhat(k, 0).dotc(est.hhat(i, 0));
        pk += est.hhat(k, 0).norm_squared();
        pi += est.hhat(i, 0).norm_squared();
    }
    assert!(corr.norm() / (pk * pi).sqrt() > 0.1);
}

#[test]
fn forwarded_error_variance_is_calibrated() {
    // Given the estimates, g - ghat ~ CN(0, psitilde), so |g - ghat|^2 / psitilde
    // is unit exponential; its mean over 1e4 draws lies well within 4%.
    let (cfg, stats, _) = small();
    let powers = cfg.ue_powers();
    let s2 = cfg.noise_power_w();
    let trials = 10_000;
    let mut sum = [0.0; 2];
    for b in 0..trials {
        let mut rng = block_rng(8, 0, b);
        let (ch, est) = stats.draw_block(&mut rng);
        let payload = simulate_payload(&ch, &powers, s2, &mut rng);
        let run = run_stripe(
            &est,
            &powers,
            s2,
            Some(PayloadView {
                channels: &ch,
                payload: &payload,
            }),
        )
        .unwrap();
        let last = run.final_state();
        let genie = run.genie.as_ref().unwrap().last().unwrap();
        // own gain and one interferer, both for served UE 0
        for (slot, i) in [0usize, 1].into_iter().enumerate() {
            let err = genie.gain[i] - last.ghat(i, 0);
            sum[slot] += err.norm_sqr() / last.psi_tilde(i, 0);
        }
    }
    for s in sum {
        let mean = s / trials as f64;
        assert!((mean - 1.0).abs() < 0.04, "{mean}");
    }
}

#[test]
fn soft_estimate_matches_effective_model() {
    let (cfg, stats, _) = small();
    let powers = cfg.ue_powers();
    let s2 = cfg.noise_power_w();
    let mut rng = block_rng(9, 0, 0);
    let (ch, est) = stats.draw_block(&mut rng);
    let payload = simulate_payload(&ch, &powers, s2, &mut rng);
    let run = run_stripe(
        &est,
        &powers,
        s2,
        Some(PayloadView {
            channels: &ch,
            payload: &payload,
        }),
    )
    .unwrap();
    let last = run.final_state();
    let genie = run.genie.as_ref().unwrap().last().unwrap();
    for k in 0..cfg.num_ues {
        let w = run.combiners.stacked_combiner(k);
        let y = CMatrix::from_iterator(
            w.len(),
            1,
            payload.received.iter().flat_map(|v| v.iter().copied()),
        );
        let direct = (w.adjoint() * y)[(0, 0)];
        let soft = last.soft_estimates.as_ref().unwrap()[k];
        assert!((direct - soft).norm() < 1e-10 * soft.norm());
        let model: C64 = (0..cfg.num_ues)
            .map(|i| genie.gain[k * cfg.num_ues + i] * payload.symbols[i])
            .sum::<C64>()
            + genie.noise[k];
        assert!((model - soft).norm() < 1e-10 * soft.norm());
    }
}
