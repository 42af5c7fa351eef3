//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string. The `*_json`
//! functions hold the logic and are what the native tests exercise.

use serde_json::{json, Value};
use spde_hypotest::montecarlo::{estimate_error_rate, predicted_type_one, Hypothesis, McPlan, Sampler};
use spde_hypotest::ou_sim::{simulate, ModelSpec};
use spde_hypotest::sld::{c_limit, cgf_log_l, rate_i, SldContext};
use spde_hypotest::stats::{HypothesisPair, Regime};
use spde_hypotest::{EigenvalueModel, SpectralBasis, TestSpec};
use wasm_bindgen::prelude::*;

/// Caps that keep a single call responsive in a browser tab.
pub const MAX_MODES: usize = 64;
pub const MAX_GRID_POINTS: usize = 20_000;
pub const MAX_REPLICATES: u64 = 20_000;

type Res<T> = std::result::Result<T, String>;

fn basis(n_modes: usize, beta: f64) -> Res<SpectralBasis> {
    if n_modes == 0 || n_modes > MAX_MODES {
        return Err(format!("number of modes must be between 1 and {MAX_MODES}"));
    }
    SpectralBasis::new(EigenvalueModel::default(), n_modes, beta, 1.0).map_err(|e| e.to_string())
}

fn regime(large_n: bool) -> Regime {
    if large_n {
        Regime::LargeN
    } else {
        Regime::LargeT
    }
}

/// Mode paths under drift `theta`: `{"t": [...], "u": [[u_1...], ...]}`.
pub fn simulate_paths_json(theta: f64, n_modes: usize, beta: f64, horizon: f64, seed: u64) -> Res<String> {
    let spec = ModelSpec::new(theta, 1.0, basis(n_modes, beta)?, horizon, 100).map_err(|e| e.to_string())?;
    if spec.n_steps() > MAX_GRID_POINTS {
        return Err(format!("horizon too long for the demo (at most {} steps)", MAX_GRID_POINTS));
    }
    let traj = simulate(&spec, seed).map_err(|e| e.to_string())?;
    Ok(json!({ "t": traj.grid, "u": traj.values }).to_string())
}

/// CGF of ln L on a grid of ε above ε₋, and the rate function on a grid of η
/// below the upper edge (θ₁-θ₀)M/2.
pub fn sld_curves_json(theta0: f64, theta1: f64, n_modes: usize, beta: f64, horizon: f64, points: usize) -> Res<String> {
    let hyp = HypothesisPair::new(theta0, theta1).map_err(|e| e.to_string())?;
    let ctx = SldContext::new(hyp, basis(n_modes, beta)?, 1.0, horizon).map_err(|e| e.to_string())?;
    let points = points.clamp(10, 2000);
    let lo = hyp.eps_minus();
    let eps: Vec<f64> = (1..=points).map(|i| lo + (2.0 - lo) * i as f64 / points as f64).collect();
    let cgf: Vec<f64> = eps.iter().map(|&e| cgf_log_l(&ctx, e).map(|v| v / horizon)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let limit: Vec<f64> = eps.iter().map(|&e| c_limit(&hyp, ctx.m, e)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let edge = hyp.diff() * ctx.m / 2.0;
    let eta: Vec<f64> = (0..points).map(|i| -hyp.diff() * ctx.m + 0.98 * (edge + hyp.diff() * ctx.m) * i as f64 / points as f64).collect();
    let rate: Vec<f64> = eta.iter().map(|&x| rate_i(&hyp, ctx.m, x)).collect();
    Ok(json!({ "eps": eps, "cgf_per_t": cgf, "c_limit": limit, "eta": eta, "rate": rate, "M": ctx.m }).to_string())
}

/// Monte Carlo Type I error and power of the likelihood-ratio test.
#[allow(clippy::too_many_arguments)]
pub fn error_rates_json(
    theta0: f64,
    theta1: f64,
    n_modes: usize,
    beta: f64,
    horizon: f64,
    large_n: bool,
    alpha: f64,
    delta: f64,
    replicates: u64,
    seed: u64,
) -> Res<String> {
    if replicates == 0 || replicates > MAX_REPLICATES {
        return Err(format!("replicates must be between 1 and {MAX_REPLICATES}"));
    }
    let hyp = HypothesisPair::new(theta0, theta1).map_err(|e| e.to_string())?;
    let test = TestSpec::new(regime(large_n), alpha, delta, hyp).map_err(|e| e.to_string())?;
    let spec = ModelSpec::new(theta0, 1.0, basis(n_modes, beta)?, horizon, 100).map_err(|e| e.to_string())?;
    let plan = McPlan { spec: spec.clone(), test, replicates, base_seed: seed, sweep: None, sampler: Sampler::Exact };
    let null = estimate_error_rate(&plan, Hypothesis::Null).map_err(|e| e.to_string())?;
    let alt = estimate_error_rate(&plan, Hypothesis::Alternative).map_err(|e| e.to_string())?;
    let (p0, p1) = (&null.points[0], &alt.points[0]);
    let predicted = predicted_type_one(&test, &spec).ok();
    Ok(json!({
        "type1": p0.estimate,
        "type1_se": p0.standard_error,
        "power": p1.estimate,
        "power_se": p1.standard_error,
        "predicted_type1": predicted.map(Value::from).unwrap_or(Value::Null),
        "log_threshold": p0.get("log_threshold"),
    })
    .to_string())
}

#[wasm_bindgen(js_name = simulatePaths)]
pub fn simulate_paths(theta: f64, n_modes: usize, beta: f64, horizon: f64, seed: u32) -> Result<String, JsError> {
    simulate_paths_json(theta, n_modes, beta, horizon, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sldCurves)]
pub fn sld_curves(theta0: f64, theta1: f64, n_modes: usize, beta: f64, horizon: f64, points: usize) -> Result<String, JsError> {
    sld_curves_json(theta0, theta1, n_modes, beta, horizon, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = errorRates)]
#[allow(clippy::too_many_arguments)]
pub fn error_rates(
    theta0: f64,
    theta1: f64,
    n_modes: usize,
    beta: f64,
    horizon: f64,
    large_n: bool,
    alpha: f64,
    delta: f64,
    replicates: u32,
    seed: u32,
) -> Result<String, JsError> {
    error_rates_json(theta0, theta1, n_modes, beta, horizon, large_n, alpha, delta, replicates as u64, seed as u64)
        .map_err(|e| JsError::new(&e))
}
