//! Browser bindings for the stability-region explorer in `www/`.
//!
//! Each export is a thin wrapper over a plain function so the logic can be
//! tested natively.

use serde_json::json;
use wasm_bindgen::prelude::*;

use onestep::problems::problem_decay;
use onestep::schemes::{integrate_observed, BetaConfig2, BetaConfig3, SchemeConfig};
use onestep::stability::{classify, numeric_a_stability, rasterize, StabilityFunction};

fn stability_function(order: u32, betas: &[f64]) -> Result<StabilityFunction, String> {
    match (order, betas) {
        (2, [b1, b2, ..]) => BetaConfig2::new(*b1, *b2).map(StabilityFunction::onestep2),
        (3, [b1, b2, b3, ..]) => BetaConfig3::new(*b1, *b2, *b3).map(StabilityFunction::onestep3),
        (2 | 3, _) => return Err(format!("order {order} needs {order} betas, got {}", betas.len())),
        _ => return Err(format!("order must be 2 or 3, got {order}")),
    }
    .map_err(|e| e.to_string())
}

/// Row-major `n × n` mask, 1 where `|R| ≤ 1`; row 0 is the top (largest Im).
pub fn region_mask(
    order: u32,
    betas: &[f64],
    re: (f64, f64),
    im: (f64, f64),
    n: usize,
) -> Result<Vec<u8>, String> {
    let sf = stability_function(order, betas)?;
    let raster = rasterize(&sf, re, im, n, n).map_err(|e| e.to_string())?;
    Ok(raster.inside.iter().map(|&b| u8::from(b)).collect())
}

/// Analytic and sampled stability verdicts as a JSON object.
pub fn classification(order: u32, betas: &[f64]) -> Result<String, String> {
    let sf = stability_function(order, betas)?;
    let class = classify(&sf.kind);
    let numeric = numeric_a_stability(&sf);
    Ok(json!({
        "provably_a_stable": class.a_stable,
        "l_stable": class.l_stable,
        "condition_applicable": class.condition_applicable,
        "numerically_a_stable": numeric.numerically_a_stable,
        "max_abs_R_on_axis": numeric.max_abs_r_on_axis,
        "modulus_at_infinity": numeric.modulus_at_infinity,
    })
    .to_string())
}

/// `u^0, …, u^steps` for `u' = -λu`, `u(0) = 1`, stepped with the two-β scheme.
pub fn decay(lambda: f64, dt: f64, steps: usize, beta1: f64, beta2: f64) -> Result<Vec<f64>, String> {
    let problem = problem_decay(lambda).map_err(|e| e.to_string())?;
    let cfg = SchemeConfig::OneStep2(BetaConfig2::new(beta1, beta2).map_err(|e| e.to_string())?);
    let stepper = cfg.build(dt, &problem.operator).map_err(|e| e.to_string())?;
    let mut values = vec![problem.initial[0].re];
    integrate_observed(
        stepper.as_ref(),
        problem.forcing.as_ref(),
        problem.initial.clone(),
        0.0,
        dt * steps as f64,
        &[],
        &mut |_, _, u| values.push(u[0].re),
    )
    .map_err(|e| e.to_string())?;
    Ok(values)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn stability_region(
    order: u32,
    betas: Vec<f64>,
    re_lo: f64,
    re_hi: f64,
    im_lo: f64,
    im_hi: f64,
    n: usize,
) -> Result<Vec<u8>, JsError> {
    region_mask(order, &betas, (re_lo, re_hi), (im_lo, im_hi), n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = classify)]
pub fn classify_js(order: u32, betas: Vec<f64>) -> Result<String, JsError> {
    classification(order, &betas).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn decay_trajectory(lambda: f64, dt: f64, steps: usize, beta1: f64, beta2: f64) -> Result<Vec<f64>, JsError> {
    decay(lambda, dt, steps, beta1, beta2).map_err(|e| JsError::new(&e))
}
