//! Monte Carlo cross-check of an equilibrium: Euler-Maruyama on the
//! debt-to-income ratio under the tabulated feedback.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SigmaMode};
use crate::solution::{EquilibriumSolution, HoldPoint};

#[cfg(test)]
mod tests;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    /// Censoring horizon.
    pub t_max: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Paths per parallel work unit. Does not affect results.
    pub batch: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 1e-3, t_max: 200.0, n_paths: 100_000, seed: 20_240_601, batch: 1000 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation("sim.dt must be positive".into()));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return Err(Error::Validation("sim.t_max must be finite and at least sim.dt".into()));
        }
        if self.n_paths == 0 {
            return Err(Error::Validation("sim.n_paths must be at least 1".into()));
        }
        if self.batch == 0 {
            return Err(Error::Validation("sim.batch must be at least 1".into()));
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub bankrupt: bool,
    /// Bankruptcy time; infinite when censored.
    pub t_b: f64,
    pub disc_cost: f64,
    /// `exp(-(r+lambda) T_b)`, zero when censored.
    pub disc_factor: f64,
}

impl PathResult {
    /// Lenders' payoff per unit face value: `1 - (1 - theta(x*)) exp(-(r+lambda) T_b)`.
    pub fn price_payoff(&self, theta_star: f64) -> f64 {
        // written so that the endpoints 1 and theta(x*) come out exactly
        (1.0 - self.disc_factor) + theta_star * self.disc_factor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    pub censored_fraction: f64,
}

impl MCEstimate {
    fn from_samples(xs: &[f64], censored: usize) -> Self {
        let n = xs.len();
        if xs.iter().all(|&x| x == xs[0]) {
            return MCEstimate { censored_fraction: censored as f64 / n as f64, ..Self::degenerate(xs[0], n, false) };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        MCEstimate { mean, std_error: (var / n as f64).sqrt(), n, censored_fraction: censored as f64 / n as f64 }
    }

    /// `n` identical samples.
    fn degenerate(x: f64, n: usize, censored: bool) -> Self {
        MCEstimate { mean: x, std_error: 0.0, n, censored_fraction: if censored { 1.0 } else { 0.0 } }
    }
}

/// Cost and price estimates from one batch of paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCPair {
    pub cost: MCEstimate,
    pub price: MCEstimate,
    /// Upper bound on the cost missing from censored paths.
    pub cost_bias_bound: f64,
    /// Upper bound on the price error from treating censored paths as never bankrupt.
    pub price_bias_bound: f64,
}

/// Tabulated feedback `(p, u)` with constant-time lookup and an optional
/// control multiplier.
pub(crate) struct Feedback<'a> {
    xs: &'a [f64],
    p: &'a [f64],
    u: &'a [f64],
    hold: Option<HoldPoint>,
    scale: f64,
    /// `buckets[j]`: bracket index of the left end of the j-th uniform cell.
    buckets: Vec<usize>,
    inv_cell: f64,
}

const U_CEILING: f64 = 1.0 - 1e-12;

impl<'a> Feedback<'a> {
    pub(crate) fn new(sol: &'a EquilibriumSolution, scale: f64) -> Self {
        let xs = &sol.xs[..];
        let n = xs.len();
        let m = 4 * n;
        let (lo, hi) = (xs[0], xs[n - 1]);
        let cell = (hi - lo) / m as f64;
        let mut buckets = Vec::with_capacity(m + 1);
        let mut i = 0;
        for j in 0..=m {
            let x = lo + j as f64 * cell;
            while i + 2 < n && xs[i + 1] <= x {
                i += 1;
            }
            buckets.push(i);
        }
        Feedback { xs, p: &sol.p, u: &sol.u, hold: sol.hold, scale, buckets, inv_cell: 1.0 / cell }
    }

    #[inline]
    fn bracket(&self, x: f64) -> usize {
        let n = self.xs.len();
        let j = (((x - self.xs[0]) * self.inv_cell) as usize).min(self.buckets.len() - 1);
        let mut i = self.buckets[j];
        while i + 2 < n && self.xs[i + 1] <= x {
            i += 1;
        }
        i
    }

    #[inline]
    pub(crate) fn eval(&self, x: f64) -> (f64, f64) {
        let (p, u) = self.eval_unscaled(x);
        (p, (u * self.scale).clamp(0.0, U_CEILING))
    }

    #[inline]
    fn eval_unscaled(&self, x: f64) -> (f64, f64) {
        let i = self.bracket(x);
        let (mut pl, mut ul) = (self.p[i], self.u[i]);
        if let Some(h) = self.hold {
            if x == h.x1 {
                return (self.p[h.index], self.u[h.index]);
            }
            if i == h.index {
                pl = h.p_right;
                ul = h.u_right;
            }
        }
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        (pl + t * (self.p[i + 1] - pl), ul + t * (self.u[i + 1] - ul))
    }
}

fn check_inputs(x0: f64, sol: &EquilibriumSolution, params: &ModelParams, cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    params.validate()?;
    if sol.len() < 2 || sol.xs[0] > 0.0 || (sol.x_star() - params.x_star).abs() > 1e-9 * params.x_star {
        return Err(Error::Domain("solution grid must cover [0, x*] of the given parameters".into()));
    }
    if !(0.0..=params.x_star).contains(&x0) {
        return Err(Error::Domain(format!("x0 = {x0} outside [0, {}]", params.x_star)));
    }
    Ok(())
}

/// One Euler-Maruyama path. `normal` supplies standard normal draws; it is
/// not called when `sigma = 0`. `observe` sees the ratio after every step.
pub(crate) fn run_path(
    x0: f64,
    fb: &Feedback,
    params: &ModelParams,
    cfg: &SimConfig,
    mut normal: impl FnMut() -> f64,
    mut observe: impl FnMut(f64),
) -> PathResult {
    let x_star = params.x_star;
    if x0 >= x_star {
        return PathResult { bankrupt: true, t_b: 0.0, disc_cost: params.b, disc_factor: 1.0 };
    }
    let dt = cfg.dt;
    let vol = params.sigma * dt.sqrt();
    let step_discount = (-params.r * dt).exp();
    let mut x = x0;
    let mut disc = 1.0;
    let mut cost = 0.0;
    for k in 0..cfg.n_steps() {
        let (p, u) = fb.eval(x);
        let l = params.cost.value(u);
        cost += disc * l * dt;
        if x == 0.0 && u == 0.0 && l == 0.0 {
            // drift and diffusion vanish: absorbed at the origin
            break;
        }
        let drift = (params.drift_scaled(p, SigmaMode::Stochastic) * x - u) / p.max(1e-300);
        let shock = if vol > 0.0 { vol * x * normal() } else { 0.0 };
        x = (x + drift * dt - shock).max(0.0);
        observe(x);
        disc *= step_discount;
        if x >= x_star {
            let t = (k + 1) as f64 * dt;
            return PathResult {
                bankrupt: true,
                t_b: t,
                disc_cost: cost + (-params.r * t).exp() * params.b,
                disc_factor: (-params.lender_rate() * t).exp(),
            };
        }
    }
    PathResult { bankrupt: false, t_b: f64::INFINITY, disc_cost: cost, disc_factor: 0.0 }
}

/// Random stream of path `index`: a ChaCha8 stream keyed by the base seed and
/// the path index, so results do not depend on how paths are batched.
pub fn path_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn simulate_path(
    x0: f64,
    sol: &EquilibriumSolution,
    params: &ModelParams,
    cfg: &SimConfig,
    stream: &mut ChaCha8Rng,
) -> Result<PathResult> {
    check_inputs(x0, sol, params, cfg)?;
    let fb = Feedback::new(sol, 1.0);
    Ok(run_path(x0, &fb, params, cfg, || stream.sample(StandardNormal), |_| ()))
}

fn bias_bounds(params: &ModelParams, sol: &EquilibriumSolution, scale: f64, cfg: &SimConfig) -> (f64, f64) {
    let sup_l = sol.u.iter().map(|&u| params.cost.value((u * scale).clamp(0.0, U_CEILING))).fold(0.0, f64::max);
    let t = cfg.n_steps() as f64 * cfg.dt;
    ((-params.r * t).exp() * (params.b + sup_l / params.r), (-params.lender_rate() * t).exp())
}

/// Cost and price estimates at `x0` under the feedback with its control
/// multiplied by `scale` (clamped to `[0, 1)`).
pub fn mc_estimates(
    x0: f64,
    sol: &EquilibriumSolution,
    params: &ModelParams,
    cfg: &SimConfig,
    scale: f64,
) -> Result<MCPair> {
    check_inputs(x0, sol, params, cfg)?;
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("control scale {scale} must be finite and non-negative")));
    }
    let fb = Feedback::new(sol, scale);
    let theta = params.theta_star();
    let (cost_bias_bound, price_bias_bound) = bias_bounds(params, sol, scale, cfg);
    if params.sigma == 0.0 {
        // every path is the same
        let r = run_path(x0, &fb, params, cfg, || 0.0, |_| ());
        return Ok(MCPair {
            cost: MCEstimate::degenerate(r.disc_cost, cfg.n_paths, !r.bankrupt),
            price: MCEstimate::degenerate(r.price_payoff(theta), cfg.n_paths, !r.bankrupt),
            cost_bias_bound,
            price_bias_bound,
        });
    }
    let starts: Vec<usize> = (0..cfg.n_paths).step_by(cfg.batch).collect();
    let batches: Vec<Vec<PathResult>> = starts
        .par_iter()
        .map(|&s| {
            (s..(s + cfg.batch).min(cfg.n_paths))
                .map(|i| {
                    let mut rng = path_stream(cfg.seed, i as u64);
                    run_path(x0, &fb, params, cfg, || rng.sample(StandardNormal), |_| ())
                })
                .collect()
        })
        .collect();
    let paths: Vec<&PathResult> = batches.iter().flatten().collect();
    let censored = paths.iter().filter(|r| !r.bankrupt).count();
    let costs: Vec<f64> = paths.iter().map(|r| r.disc_cost).collect();
    let prices: Vec<f64> = paths.iter().map(|r| r.price_payoff(theta)).collect();
    Ok(MCPair {
        cost: MCEstimate::from_samples(&costs, censored),
        price: MCEstimate::from_samples(&prices, censored),
        cost_bias_bound,
        price_bias_bound,
    })
}

pub fn mc_cost(x0: f64, sol: &EquilibriumSolution, params: &ModelParams, cfg: &SimConfig) -> Result<MCEstimate> {
    Ok(mc_estimates(x0, sol, params, cfg, 1.0)?.cost)
}

pub fn mc_bond_price(x0: f64, sol: &EquilibriumSolution, params: &ModelParams, cfg: &SimConfig) -> Result<MCEstimate> {
    Ok(mc_estimates(x0, sol, params, cfg, 1.0)?.price)
}

/// Discretization allowances added to `3 SE` in the verification gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyTolerances {
    pub price_allowance: f64,
    /// Cost allowance as a fraction of `B`.
    pub cost_allowance_frac: f64,
    pub perturbation_scales: [f64; 2],
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances { price_allowance: 0.01, cost_allowance_frac: 0.02, perturbation_scales: [0.9, 1.1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCheck {
    pub scale: f64,
    pub cost: MCEstimate,
    /// `cost.mean - (optimal mean - 2 SE)`; negative means failure.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub x0: f64,
    pub p_solver: f64,
    pub v_solver: f64,
    pub estimate: MCPair,
    pub price_gap: f64,
    pub price_tol: f64,
    pub price_ok: bool,
    pub cost_gap: f64,
    pub cost_tol: f64,
    pub cost_ok: bool,
    pub perturbations: Vec<PerturbationCheck>,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.price_ok && self.cost_ok && self.perturbations.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub probes: Vec<ProbeReport>,
    pub passed: bool,
}

/// Compares Monte Carlo estimates with the solver's `p` and `V` at each probe,
/// and checks that scaling the control does not lower the cost.
pub fn verify_equilibrium(
    sol: &EquilibriumSolution,
    params: &ModelParams,
    cfg: &SimConfig,
    probes: &[f64],
    tol: &VerifyTolerances,
) -> Result<VerificationReport> {
    let mut out = Vec::with_capacity(probes.len());
    for &x0 in probes {
        let est = mc_estimates(x0, sol, params, cfg, 1.0)?;
        let p_solver = sol.price_at(x0);
        let v_solver = sol.value_at(x0);
        let price_gap = (est.price.mean - p_solver).abs();
        let price_tol = 3.0 * est.price.std_error + tol.price_allowance;
        let cost_gap = (est.cost.mean - v_solver).abs();
        let cost_tol = 3.0 * est.cost.std_error + tol.cost_allowance_frac * params.b;
        let mut perturbations = Vec::new();
        for &scale in &tol.perturbation_scales {
            let c = mc_estimates(x0, sol, params, cfg, scale)?.cost;
            let margin = c.mean - (est.cost.mean - 2.0 * est.cost.std_error);
            perturbations.push(PerturbationCheck { scale, cost: c, margin, passed: margin >= 0.0 });
        }
        out.push(ProbeReport {
            x0,
            p_solver,
            v_solver,
            estimate: est,
            price_gap,
            price_tol,
            price_ok: price_gap <= price_tol,
            cost_gap,
            cost_tol,
            cost_ok: cost_gap <= cost_tol,
            perturbations,
        });
    }
    let passed = out.iter().all(ProbeReport::passed);
    Ok(VerificationReport { probes: out, passed })
}
