//! Browser bindings. Every export takes the same `key = value` configuration
//! text as the command line and returns JSON for the page to plot.

use debtgame::analysis::{classify_regime, stochastic_envelope, sweep_xstar, SweepOptions};
use debtgame::config::{parse_config, RunConfig};
use debtgame::det::assemble_equilibrium;
use debtgame::stoch::solve_stochastic;
use debtgame::SolveMode;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Points on the envelope grid; the page only needs enough for a smooth curve.
const ENVELOPE_POINTS: usize = 400;

#[derive(Debug, Serialize)]
pub struct SolveOut {
    pub mode: &'static str,
    pub x1: Option<f64>,
    pub residual: f64,
    pub x: Vec<f64>,
    pub value: Vec<f64>,
    pub price: Vec<f64>,
    pub control: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct EnvelopeOut {
    pub x: Vec<f64>,
    pub p1: Vec<f64>,
    pub v1: Vec<f64>,
    pub p2: Vec<f64>,
    pub v2: Vec<f64>,
    pub x2: f64,
    pub m1: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepOut {
    pub x0: f64,
    pub x_star: Vec<f64>,
    pub value: Vec<Option<f64>>,
    pub status: Vec<String>,
    pub minimizer: Option<f64>,
    pub regime: Option<&'static str>,
}

fn load(text: &str) -> Result<RunConfig, String> {
    parse_config(text).map_err(|e| e.to_string())
}

pub fn solve_data(text: &str) -> Result<SolveOut, String> {
    let cfg = load(text)?;
    let sol = match cfg.mode {
        SolveMode::Deterministic => assemble_equilibrium(&cfg.params, &cfg.det),
        SolveMode::Stochastic => solve_stochastic(&cfg.params, &cfg.stoch),
    }
    .map_err(|e| e.to_string())?;
    Ok(SolveOut {
        mode: sol.mode.as_str(),
        x1: sol.x1,
        residual: sol.residual,
        x: sol.xs,
        value: sol.v,
        price: sol.p,
        control: sol.u,
    })
}

pub fn envelope_data(text: &str) -> Result<EnvelopeOut, String> {
    let cfg = load(text)?;
    let x_star = cfg.params.x_star;
    let n = ENVELOPE_POINTS;
    let grid: Vec<f64> = (0..n).map(|i| if i + 1 == n { x_star } else { x_star * i as f64 / (n - 1) as f64 }).collect();
    let e = stochastic_envelope(&cfg.params, &grid).map_err(|e| e.to_string())?;
    Ok(EnvelopeOut { x: e.xs, p1: e.p1, v1: e.v1, p2: e.p2, v2: e.v2, x2: e.x2, m1: e.m1 })
}

pub fn sweep_data(text: &str) -> Result<SweepOut, String> {
    let cfg = load(text)?;
    let opts = SweepOptions { mode: cfg.mode, det: cfg.det, stoch: cfg.stoch.clone() };
    let res = sweep_xstar(cfg.sweep.x0, &cfg.sweep.grid(), &cfg.params, &opts).map_err(|e| e.to_string())?;
    // the regime needs a decaying recovery; leave it out when it cannot be decided
    let regime = classify_regime(&cfg.params).ok().map(|t| t.tag.as_str());
    Ok(SweepOut {
        x0: res.x0,
        x_star: res.xstars(),
        value: res.values(),
        status: res.points.iter().map(|p| p.status.label()).collect(),
        minimizer: res.minimizer,
        regime,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Equilibrium value, price and control on the solver grid.
#[wasm_bindgen]
pub fn solve(config: &str) -> Result<String, JsError> {
    to_json(solve_data(config))
}

/// Sub- and supersolution envelopes of the stochastic equilibrium.
#[wasm_bindgen]
pub fn envelope(config: &str) -> Result<String, JsError> {
    to_json(envelope_data(config))
}

/// Borrower's value at `sweep.x0` across bankruptcy thresholds.
#[wasm_bindgen]
pub fn sweep(config: &str) -> Result<String, JsError> {
    to_json(sweep_data(config))
}
