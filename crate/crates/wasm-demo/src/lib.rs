//! WebAssembly bindings for the demo page. Every export returns a JSON
//! string; the `*_json` functions hold the logic and are callable natively.

use amli::amli::{AmliConfig, Cycle, Form, Variant};
use amli::experiment::{run_case, ExperimentCase};
use amli::fem::Source;
use amli::linalg::dense_gen_sym_eig;
use amli::mesh::Dimension;
use amli::theory::{b11_condition, cbs, decade_grid, eigen_closed_form, macro_blocks, sequences};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest finest-mesh size the page may request per dimension; keeps a
/// single solve well under a second in the browser.
pub const MAX_INV_H_2D: usize = 256;
pub const MAX_INV_H_3D: usize = 16;

fn dimension(dim: u32) -> Result<Dimension, String> {
    Dimension::from_usize(dim as usize).ok_or_else(|| format!("dimension must be 2 or 3, got {dim}"))
}

/// Squared CBS constants by level for `e = 10^m`, `m = m_lo..=m_hi`.
pub fn cbs_curves_json(dim: u32, m_lo: i32, m_hi: i32, max_level: u32) -> Result<Value, String> {
    let dim = dimension(dim)?;
    if m_lo > m_hi || max_level > 60 {
        return Err("need m_lo <= m_hi and at most 60 levels".into());
    }
    let curves: Vec<Value> = decade_grid(m_lo, m_hi)
        .into_iter()
        .map(|e| {
            let st = sequences(e, max_level as usize);
            let c2: Vec<f64> = (0..=max_level as usize).map(|l| cbs(dim, &st, l).c2).collect();
            json!({ "e": e, "c2": c2 })
        })
        .collect();
    Ok(json!({ "bound": dim.theta(), "curves": curves }))
}

/// Generalized spectrum of the condensed macro-element Schur complement
/// against its coarse block, with the closed-form `γ²` and the condition
/// numbers of the difference block.
pub fn local_spectrum_json(dim: u32, e: f64) -> Result<Value, String> {
    let dim = dimension(dim)?;
    if !(e > 0.0 && e.is_finite()) {
        return Err(format!("e must be positive, got {e}"));
    }
    let blocks = macro_blocks(dim, &sequences(e, 0), 0).map_err(|x| x.to_string())?;
    let eigenvalues = dense_gen_sym_eig(&blocks.s, &blocks.b22).map_err(|x| x.to_string())?;
    let (lambda, gamma2) = eigen_closed_form(dim, e);
    let cond = b11_condition(dim, e).map_err(|x| x.to_string())?;
    Ok(json!({
        "eigenvalues": eigenvalues,
        "lambda_min": lambda,
        "gamma2": gamma2,
        "cond_b11": cond.raw,
        "cond_b11_ilu": cond.ilu,
    }))
}

/// Residual history of one solve with the all-ones source.
pub fn solve_history_json(
    dim: u32,
    inv_h: u32,
    alpha: f64,
    beta: f64,
    variant: &str,
    cycle: &str,
) -> Result<Value, String> {
    let dim = dimension(dim)?;
    let limit = match dim {
        Dimension::Two => MAX_INV_H_2D,
        Dimension::Three => MAX_INV_H_3D,
    };
    if inv_h as usize > limit {
        return Err(format!("1/h is limited to {limit} in dimension {dim}"));
    }
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err("alpha and beta must be positive".into());
    }
    let variant: Variant = variant.parse().map_err(|x: amli::Error| x.to_string())?;
    let cycle: Cycle = cycle.parse().map_err(|x: amli::Error| x.to_string())?;
    let levels = ExperimentCase::levels_for(dim, dim.default_coarsest(), inv_h as usize).map_err(|x| x.to_string())?;
    let mut case = ExperimentCase::new(dim, levels, AmliConfig::new(variant, Form::Multiplicative, cycle));
    case.alpha = alpha;
    case.beta = beta;
    case.rhs = Source::Ones;
    let row = run_case(&case).map_err(|x| x.to_string())?;
    let r0 = row.report.residual_norms[0];
    let relative: Vec<f64> = row.report.residual_norms.iter().map(|r| r / r0).collect();
    Ok(json!({
        "n_it": row.n_it(),
        "rho": row.rho(),
        "converged": row.report.converged,
        "residuals": relative,
    }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn cbs_curves(dim: u32, m_lo: i32, m_hi: i32, max_level: u32) -> Result<String, JsValue> {
    to_js(cbs_curves_json(dim, m_lo, m_hi, max_level))
}

#[wasm_bindgen]
pub fn local_spectrum(dim: u32, e: f64) -> Result<String, JsValue> {
    to_js(local_spectrum_json(dim, e))
}

#[wasm_bindgen]
pub fn solve_history(dim: u32, inv_h: u32, alpha: f64, beta: f64, variant: &str, cycle: &str) -> Result<String, JsValue> {
    to_js(solve_history_json(dim, inv_h, alpha, beta, variant, cycle))
}
