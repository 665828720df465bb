//! Browser bindings for the static demo page in `www/`.
//!
//! Each exported function returns a JSON string. The `*_json` functions do
//! the work and are plain Rust, so they can be tested natively.

use radio_stripe::experiment::{fronthaul_dims, run_experiment, setup_scenario};
use radio_stripe::metrics::{FronthaulComparison, FronthaulDims};
use radio_stripe::scenario::{db_to_linear, pathloss_db, Position};
use radio_stripe::{CorrelationModel, Scheme, SimulationConfig};
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const HEATMAP_CELLS: usize = 48;

#[derive(Serialize)]
struct ApInfo {
    x: f64,
    y: f64,
    boresight: f64,
}

#[derive(Serialize)]
struct UeInfo {
    x: f64,
    y: f64,
    pilot: usize,
    /// Index of the AP with the largest large-scale gain.
    best_ap: usize,
    best_gain_db: f64,
}

/// AP and UE positions of one random drop, plus a map of the best-AP
/// large-scale gain (dB) over the square on a regular grid.
pub fn layout_json(
    num_aps: usize,
    num_ues: usize,
    stripe_length_m: f64,
    seed: u64,
) -> radio_stripe::Result<Value> {
    let cfg = SimulationConfig {
        num_aps,
        num_ues,
        stripe_length_m,
        rng_seed: seed,
        ..SimulationConfig::default()
    };
    cfg.validate()?;
    let sc = setup_scenario(&cfg, 0)?;
    let aps: Vec<ApInfo> = sc
        .ap_positions
        .iter()
        .zip(&sc.ap_boresight)
        .map(|(p, &b)| ApInfo {
            x: p.x,
            y: p.y,
            boresight: b,
        })
        .collect();
    let ues: Vec<UeInfo> = (0..sc.num_ues())
        .map(|k| {
            let (best_ap, gain) = (0..sc.num_aps)
                .map(|l| (l, sc.large_scale[(k, l)]))
                .fold((0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
            UeInfo {
                x: sc.ue_positions[k].x,
                y: sc.ue_positions[k].y,
                pilot: sc.pilots.pilot_index[k],
                best_ap,
                best_gain_db: 10.0 * gain.log10(),
            }
        })
        .collect();

    let side = cfg.square_side();
    let cell = side / HEATMAP_CELLS as f64;
    let heatmap: Vec<f64> = (0..HEATMAP_CELLS * HEATMAP_CELLS)
        .map(|idx| {
            let (row, col) = (idx / HEATMAP_CELLS, idx % HEATMAP_CELLS);
            let spot = Position::new((col as f64 + 0.5) * cell, (row as f64 + 0.5) * cell, 0.0);
            let best = sc
                .ap_positions
                .iter()
                .map(|ap| db_to_linear(pathloss_db(ap.distance(&spot))))
                .fold(0.0, f64::max);
            10.0 * best.log10()
        })
        .collect();

    Ok(json!({
        "side": side,
        "aps": aps,
        "ues": ues,
        "heatmap": { "cells": HEATMAP_CELLS, "gain_db": heatmap },
    }))
}

/// Empirical SE CDFs of all three schemes on a small Monte Carlo run.
pub fn se_cdf_json(
    num_ues: usize,
    num_aps: usize,
    correlated: bool,
    num_setups: usize,
    realizations: usize,
    seed: u64,
) -> radio_stripe::Result<Value> {
    let cfg = SimulationConfig {
        num_ues,
        num_aps,
        correlation_model: if correlated {
            CorrelationModel::GaussianLocalScattering
        } else {
            CorrelationModel::Uncorrelated
        },
        num_setups,
        realizations_per_setup: realizations,
        rng_seed: seed,
        ..SimulationConfig::default()
    };
    let out = run_experiment(&cfg, &Scheme::ALL)?;
    let mut schemes = serde_json::Map::new();
    for r in &out.results {
        let cdf = r.cdf()?;
        schemes.insert(
            r.scheme.label().to_string(),
            json!({
                "median": cdf.median(),
                "values": cdf.values,
                "probabilities": cdf.probabilities,
            }),
        );
    }
    Ok(json!({ "schemes": schemes, "fronthaul": out.fronthaul }))
}

/// Front-haul scalars per coherence block for the given dimensions.
pub fn fronthaul_json(
    antennas_per_ap: u32,
    num_aps: u32,
    num_ues: u32,
    coherence_block: u32,
    pilot_length: u32,
) -> radio_stripe::Result<Value> {
    if pilot_length >= coherence_block || antennas_per_ap == 0 || num_aps == 0 || num_ues == 0 {
        return Err(radio_stripe::Error::InvalidConfig(
            "need N, L, K >= 1 and pilot length below the coherence block".into(),
        ));
    }
    let f = FronthaulComparison::new(FronthaulDims {
        antennas_per_ap: antennas_per_ap.into(),
        num_aps: num_aps.into(),
        num_ues: num_ues.into(),
        coherence_block: coherence_block.into(),
        pilot_length: pilot_length.into(),
    });
    Ok(serde_json::to_value(f)?)
}

fn to_js(v: radio_stripe::Result<Value>) -> Result<String, JsError> {
    v.map(|v| v.to_string())
        .map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn stripe_layout(
    num_aps: u32,
    num_ues: u32,
    stripe_length_m: f64,
    seed: u32,
) -> Result<String, JsError> {
    to_js(layout_json(
        num_aps as usize,
        num_ues as usize,
        stripe_length_m,
        seed.into(),
    ))
}

#[wasm_bindgen]
pub fn se_cdf(
    num_ues: u32,
    num_aps: u32,
    correlated: bool,
    num_setups: u32,
    realizations: u32,
    seed: u32,
) -> Result<String, JsError> {
    to_js(se_cdf_json(
        num_ues as usize,
        num_aps as usize,
        correlated,
        num_setups as usize,
        realizations as usize,
        seed.into(),
    ))
}

#[wasm_bindgen]
pub fn fronthaul(
    antennas_per_ap: u32,
    num_aps: u32,
    num_ues: u32,
    coherence_block: u32,
    pilot_length: u32,
) -> Result<String, JsError> {
    to_js(fronthaul_json(
        antennas_per_ap,
        num_aps,
        num_ues,
        coherence_block,
        pilot_length,
    ))
}

/// Defaults shown in the page's input fields.
#[wasm_bindgen]
pub fn default_config() -> String {
    let cfg = SimulationConfig::default();
    let d = fronthaul_dims(&cfg);
    json!({
        "num_aps": d.num_aps,
        "antennas_per_ap": d.antennas_per_ap,
        "num_ues": d.num_ues,
        "coherence_block": d.coherence_block,
        "pilot_length": d.pilot_length,
        "stripe_length_m": cfg.stripe_length_m,
    })
    .to_string()
}
