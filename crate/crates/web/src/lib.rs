//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every curve is returned as a flat `[x0, y0, x1, y1, ...]` array.

use wasm_bindgen::prelude::*;

use sparsebound::ccrb::{gamma_approx, transition_ce};
use sparsebound::experiments::{from_db, hcrb_sigma_e_sweep, hcrb_xq_sweep, lin_grid, Point};

fn flatten(points: &[Point]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x_value, p.value]).collect()
}

/// `γ(c_e, c_n)` over `c_e` in `[lo_db, hi_db]` dB.
pub fn gamma_curve_points(s: usize, cn_db: f64, lo_db: f64, hi_db: f64, points: usize) -> Result<Vec<f64>, String> {
    if s == 0 || points < 2 || !(hi_db > lo_db) {
        return Err("need s >= 1, points >= 2 and hi > lo".into());
    }
    let c_n = from_db(cn_db);
    Ok(lin_grid(lo_db, hi_db, points)
        .into_iter()
        .flat_map(|db| {
            let c_e = from_db(db);
            [c_e, gamma_approx(c_e, c_n, s)]
        })
        .collect())
}

/// `d_HCRB / (n − s)` against `σ_e²` for one sparsity, `n = 10s`.
pub fn hcrb_sigma_e_points(s: usize, sigma_n: f64, xq: f64, points: usize) -> Result<Vec<f64>, String> {
    hcrb_sigma_e_sweep(&[s], sigma_n, xq, points).map(|p| flatten(&p)).map_err(|e| e.to_string())
}

/// `d_HCRB` against `x_q` for `s = 1`.
pub fn hcrb_xq_points(n: usize, sigma_e: f64, sigma_n: f64, points: usize) -> Result<Vec<f64>, String> {
    hcrb_xq_sweep(n, sigma_n, &[sigma_e], points).map(|p| flatten(&p)).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn gamma_curve(s: usize, cn_db: f64, lo_db: f64, hi_db: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    gamma_curve_points(s, cn_db, lo_db, hi_db, points).map_err(|e| JsValue::from_str(&e))
}

/// `c_{e,t}` for a noise level given in dB.
#[wasm_bindgen]
pub fn transition_point(cn_db: f64) -> f64 {
    transition_ce(from_db(cn_db))
}

#[wasm_bindgen]
pub fn hcrb_vs_sigma_e(s: usize, sigma_n: f64, xq: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    hcrb_sigma_e_points(s, sigma_n, xq, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn hcrb_vs_xq(n: usize, sigma_e: f64, sigma_n: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    hcrb_xq_points(n, sigma_e, sigma_n, points).map_err(|e| JsValue::from_str(&e))
}
