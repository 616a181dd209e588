//! Stochastic (`sigma > 0`) equilibrium by pseudo-time relaxation of the
//! parabolic system
//!
//! ```text
//! V_t = -r V + H(x, V_x, p) + D(x) V_xx
//! p_t = (r + lambda)(1 - p) + H_xi(x, V_x, p) p_x + D(x) p_xx
//! ```
//!
//! with `D = eps + sigma^2 x^2 / 2`, continued along a decreasing sequence of
//! `eps` and extrapolated to `eps = 0`.
//!
//! Each step freezes the control at the current iterate. Since
//! `H(xi) - H_xi(xi) xi = L(w*)`, both equations are then linear in the new
//! iterate, advected with the common speed `H_xi`, and are solved implicitly.

mod tridiag;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SigmaMode};
use crate::solution::{EquilibriumSolution, SolveMode};
use tridiag::solve_tridiagonal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochSolverConfig {
    /// Nodes of the uniform grid on `[0, x*]`.
    pub n_grid: usize,
    /// Pseudo-time step.
    pub dt: f64,
    /// Regularization values as multiples of `(sigma x*)^2 / 2`, strictly decreasing.
    pub eps_schedule: Vec<f64>,
    /// Steady state once `max |update| / dt` falls below this.
    pub steady_tol: f64,
    /// Step cap per regularization value.
    pub max_steps: usize,
}

impl Default for StochSolverConfig {
    fn default() -> Self {
        StochSolverConfig {
            n_grid: 1024,
            dt: 2.0,
            eps_schedule: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8],
            steady_tol: 1e-8,
            max_steps: 50_000,
        }
    }
}

impl StochSolverConfig {
    /// Defaults with `steady_tol = 1e-9 max(B, 1)`.
    pub fn for_params(params: &ModelParams) -> Self {
        StochSolverConfig { steady_tol: 1e-9 * params.b.max(1.0), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid < 64 {
            return Err(Error::Validation("stoch.n_grid must be >= 64".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation("stoch.dt must be positive".into()));
        }
        if self.eps_schedule.is_empty() || self.eps_schedule.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Validation("stoch.eps_schedule must be non-empty and positive".into()));
        }
        if self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Validation("stoch.eps_schedule must be strictly decreasing".into()));
        }
        if !(self.steady_tol > 0.0) {
            return Err(Error::Validation("stoch.steady_tol must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Validation("stoch.max_steps must be >= 1".into()));
        }
        Ok(())
    }

    /// Absolute regularization values for `params`.
    pub fn eps_values(&self, params: &ModelParams) -> Vec<f64> {
        let scale = 0.5 * (params.sigma * params.x_star).powi(2);
        self.eps_schedule.iter().map(|e| e * scale).collect()
    }
}

/// Iterate of the relaxation on the uniform grid `x_i = i x* / (n - 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicState {
    pub t: f64,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub eps: f64,
}

impl ParabolicState {
    /// Linear data joining the boundary values.
    pub fn linear(params: &ModelParams, n: usize, eps: f64) -> Self {
        let theta = params.theta_star();
        let s: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        ParabolicState {
            t: 0.0,
            v: s.iter().map(|&s| params.b * s).collect(),
            p: s.iter().map(|&s| 1.0 - (1.0 - theta) * s).collect(),
            eps,
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// Which terms of the Hamiltonian enter a step. `Zero` switches `H` and
/// `H_xi` off, leaving two decoupled linear reaction-diffusion equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianTerms {
    Full,
    Zero,
}

/// Statistics of one relaxation step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    /// `max |update| / dt` over interior nodes and both unknowns.
    pub rate: f64,
    /// Nodes moved back into the box.
    pub projected: usize,
    /// Largest decrease of `V` / increase of `p` between neighbours.
    pub monotonicity_violation: f64,
}

fn grid_step(params: &ModelParams, n: usize) -> f64 {
    params.x_star / (n - 1) as f64
}

/// Frozen advection speed `H_xi` and running cost `L(w*)` at interior nodes.
fn frozen_coefficients(
    state: &ParabolicState,
    params: &ModelParams,
    h: f64,
    terms: HamiltonianTerms,
) -> (Vec<f64>, Vec<f64>) {
    let n = state.len();
    let mut speed = vec![0.0; n];
    let mut cost = vec![0.0; n];
    if terms == HamiltonianTerms::Zero {
        return (speed, cost);
    }
    for i in 1..n - 1 {
        let x = i as f64 * h;
        let xi = ((state.v[i + 1] - state.v[i - 1]) / (2.0 * h)).max(0.0);
        let e = params.hamiltonian_unchecked(x, xi, state.p[i], SigmaMode::Stochastic);
        speed[i] = e.h_xi;
        cost[i] = params.cost.value(e.control);
    }
    (speed, cost)
}

/// Implicit advection-diffusion-reaction solve for one unknown:
/// `(y - y_old)/dt = -c y + s + b y_x + D y_xx` with Dirichlet ends.
/// Centered advection where the cell Peclet number allows, upwind elsewhere.
#[allow(clippy::too_many_arguments)]
fn implicit_solve(
    y_old: &[f64],
    b: &[f64],
    diff: &[f64],
    c: f64,
    s: &[f64],
    h: f64,
    dt: f64,
    ends: (f64, f64),
) -> Vec<f64> {
    let n = y_old.len();
    let m = n - 2;
    let (mut lo, mut di, mut up, mut rhs) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let h2 = h * h;
    for k in 0..m {
        let i = k + 1;
        let (bi, d) = (b[i], diff[i]);
        let (mut l, mut dd, mut u) = (-d / h2, 1.0 / dt + c + 2.0 * d / h2, -d / h2);
        if bi.abs() * h <= 2.0 * d {
            l += bi / (2.0 * h);
            u -= bi / (2.0 * h);
        } else if bi > 0.0 {
            dd += bi / h;
            u -= bi / h;
        } else {
            dd -= bi / h;
            l += bi / h;
        }
        let mut r = y_old[i] / dt + s[i];
        if i == 1 {
            r -= l * ends.0;
            l = 0.0;
        }
        if i == n - 2 {
            r -= u * ends.1;
            u = 0.0;
        }
        lo[k] = l;
        di[k] = dd;
        up[k] = u;
        rhs[k] = r;
    }
    let inner = solve_tridiagonal(&lo, &di, &up, &rhs);
    let mut y = Vec::with_capacity(n);
    y.push(ends.0);
    y.extend(inner);
    y.push(ends.1);
    y
}

fn diffusion(params: &ModelParams, n: usize, eps: f64) -> Vec<f64> {
    let h = grid_step(params, n);
    let s2 = params.sigma * params.sigma;
    (0..n).map(|i| eps + 0.5 * s2 * (i as f64 * h).powi(2)).collect()
}

/// One relaxation step with explicit terms selection.
pub fn parabolic_step_with(
    state: &ParabolicState,
    params: &ModelParams,
    dt: f64,
    terms: HamiltonianTerms,
) -> Result<(ParabolicState, StepReport)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::StepSize { dt, suggested: 1.0 });
    }
    let n = state.len();
    if n < 3 {
        return Err(Error::Domain("parabolic state needs at least 3 nodes".into()));
    }
    let h = grid_step(params, n);
    let theta = params.theta_star();
    let diff = diffusion(params, n, state.eps);
    let (speed, cost) = frozen_coefficients(state, params, h, terms);
    let lender = params.lender_rate();
    let v = implicit_solve(&state.v, &speed, &diff, params.r, &cost, h, dt, (0.0, params.b));
    let src_p = vec![lender; n];
    let p = implicit_solve(&state.p, &speed, &diff, lender, &src_p, h, dt, (1.0, theta));

    let mut next = ParabolicState { t: state.t + dt, v, p, eps: state.eps };
    let mut report = StepReport::default();
    for i in 1..n - 1 {
        let dv = (next.v[i] - state.v[i]).abs();
        let dp = (next.p[i] - state.p[i]).abs();
        report.rate = report.rate.max(dv.max(dp) / dt);
        if !(0.0..=params.b).contains(&next.v[i]) {
            next.v[i] = next.v[i].clamp(0.0, params.b);
            report.projected += 1;
        }
        if !(theta..=1.0).contains(&next.p[i]) {
            next.p[i] = next.p[i].clamp(theta, 1.0);
            report.projected += 1;
        }
    }
    for i in 1..n {
        report.monotonicity_violation =
            report.monotonicity_violation.max(next.v[i - 1] - next.v[i]).max(next.p[i] - next.p[i - 1]);
    }
    if !report.rate.is_finite() {
        return Err(Error::StepSize { dt, suggested: 0.5 * dt });
    }
    Ok((next, report))
}

/// One step of the full system.
pub fn parabolic_step(state: &ParabolicState, params: &ModelParams, cfg: &StochSolverConfig) -> Result<ParabolicState> {
    Ok(parabolic_step_with(state, params, cfg.dt, HamiltonianTerms::Full)?.0)
}

/// Residual of the discrete steady equations the relaxation converges to, at
/// the state's own `eps` (the scheme's operator, frozen at the state).
pub fn steady_defect(state: &ParabolicState, params: &ModelParams) -> f64 {
    let n = state.len();
    let h = grid_step(params, n);
    let diff = diffusion(params, n, state.eps);
    let (speed, cost) = frozen_coefficients(state, params, h, HamiltonianTerms::Full);
    let lender = params.lender_rate();
    let op = |y: &[f64], i: usize| {
        let (b, d) = (speed[i], diff[i]);
        let adv = if b.abs() * h <= 2.0 * d {
            (y[i + 1] - y[i - 1]) / (2.0 * h)
        } else if b > 0.0 {
            (y[i + 1] - y[i]) / h
        } else {
            (y[i] - y[i - 1]) / h
        };
        b * adv + d * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h)
    };
    (1..n - 1)
        .map(|i| {
            let rv = (-params.r * state.v[i] + cost[i] + op(&state.v, i)).abs();
            let rp = (lender * (1.0 - state.p[i]) + op(&state.p, i)).abs();
            rv.max(rp)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub in_box: bool,
    pub v_monotone: bool,
    pub p_monotone: bool,
    /// Largest distance of a node outside `[0, B] x [theta(x*), 1]`.
    pub box_violation: f64,
    /// Largest decrease of `V` between consecutive nodes.
    pub v_monotone_violation: f64,
    /// Largest increase of `p` between consecutive nodes.
    pub p_monotone_violation: f64,
}

/// Box and monotonicity checks on nodal `(V, p)`; `tol` is the slack allowed
/// before a check reports failure.
pub fn invariance_check(v: &[f64], p: &[f64], params: &ModelParams, tol: f64) -> InvarianceReport {
    let theta = params.theta_star();
    let box_v = v.iter().map(|&y| (-y).max(y - params.b).max(0.0)).fold(0.0, f64::max);
    let box_p = p.iter().map(|&y| (theta - y).max(y - 1.0).max(0.0)).fold(0.0, f64::max);
    let mv = v.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max);
    let mp = p.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max);
    let bv = box_v.max(box_p);
    InvarianceReport {
        in_box: bv <= tol,
        v_monotone: mv <= tol,
        p_monotone: mp <= tol,
        box_violation: bv,
        v_monotone_violation: mv,
        p_monotone_violation: mp,
    }
}

/// Relaxes `state` to steadiness at its current `eps`. Returns the steps taken
/// and the worst monotonicity violation seen.
pub fn relax_to_steady(
    state: &mut ParabolicState,
    params: &ModelParams,
    cfg: &StochSolverConfig,
) -> Result<(usize, f64, usize)> {
    let mut worst = 0.0f64;
    let mut projections = 0;
    let mut last = f64::INFINITY;
    for step in 1..=cfg.max_steps {
        let (next, rep) = parabolic_step_with(state, params, cfg.dt, HamiltonianTerms::Full)?;
        *state = next;
        worst = worst.max(rep.monotonicity_violation);
        projections += rep.projected;
        last = rep.rate;
        if rep.rate < cfg.steady_tol {
            return Ok((step, worst, projections));
        }
    }
    Err(Error::NoConvergence { steps: cfg.max_steps, last_update: last, eps: state.eps })
}

/// Feedback control at the nodes: centered slopes inside, one-sided at `x*`.
fn nodal_control(xs: &[f64], v: &[f64], p: &[f64], params: &ModelParams) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                return 0.0;
            }
            let xi = if i + 1 < n {
                (v[i + 1] - v[i - 1]) / (xs[i + 1] - xs[i - 1])
            } else {
                (v[i] - v[i - 1]) / (xs[i] - xs[i - 1])
            };
            params.cost.slope_inverse_unchecked(xi.max(0.0) / p[i])
        })
        .collect()
}

pub fn solve_stochastic(params: &ModelParams, cfg: &StochSolverConfig) -> Result<EquilibriumSolution> {
    params.validate()?;
    cfg.validate()?;
    if !(params.sigma > 0.0) {
        return Err(Error::Hypothesis("the stochastic solver requires sigma > 0".into()));
    }
    let theta = params.theta_star();
    if !(theta > 0.0) {
        return Err(Error::Hypothesis("the stochastic solver requires theta(x*) > 0".into()));
    }
    let n = cfg.n_grid;
    let eps = cfg.eps_values(params);
    let mut state = ParabolicState::linear(params, n, eps[0]);
    let mut diagnostics = BTreeMap::new();
    let mut previous: Option<ParabolicState> = None;
    let mut total_steps = 0;
    let mut worst_monotone = 0.0f64;
    let mut total_projections = 0;
    for (k, &e) in eps.iter().enumerate() {
        state.eps = e;
        let (steps, worst, proj) = relax_to_steady(&mut state, params, cfg)?;
        total_steps += steps;
        worst_monotone = worst_monotone.max(worst);
        total_projections += proj;
        diagnostics.insert(format!("steps_eps{k}"), steps as f64);
        diagnostics.insert(format!("eps{k}"), e);
        if k + 1 < eps.len() {
            previous = Some(state.clone());
        }
    }
    diagnostics.insert("steps_total".into(), total_steps as f64);
    diagnostics.insert("monotonicity_violation_max".into(), worst_monotone);
    diagnostics.insert("projections_total".into(), total_projections as f64);
    diagnostics.insert("steady_defect".into(), steady_defect(&state, params));

    let (mut v, mut p) = (state.v.clone(), state.p.clone());
    if let Some(prev) = &previous {
        // Linear extrapolation in eps to eps = 0.
        let w = state.eps / (prev.eps - state.eps);
        let mut dv = 0.0f64;
        let mut dp = 0.0f64;
        for i in 1..n - 1 {
            let (sv, sp) = (state.v[i] - prev.v[i], state.p[i] - prev.p[i]);
            dv = dv.max(sv.abs());
            dp = dp.max(sp.abs());
            v[i] = (v[i] + w * sv).clamp(0.0, params.b);
            p[i] = (p[i] + w * sp).clamp(theta, 1.0);
        }
        diagnostics.insert("eps_delta_v".into(), dv);
        diagnostics.insert("eps_delta_p".into(), dp);
    }
    let h = grid_step(params, n);
    let xs: Vec<f64> = (0..n).map(|i| if i + 1 == n { params.x_star } else { i as f64 * h }).collect();
    let u = nodal_control(&xs, &v, &p, params);
    let mut sol = EquilibriumSolution {
        xs,
        v,
        p,
        u,
        x1: None,
        hold: None,
        mode: SolveMode::Stochastic,
        residual: 0.0,
        diagnostics,
    };
    sol.residual = stoch_residual(&sol, params);
    Ok(sol)
}

/// Signed residuals `(rV - H - D V'', (r+lambda)(p-1) - H_xi p' - D p'')` with
/// `D = sigma^2 x^2 / 2` at interior nodes, by centered differences.
pub fn stoch_residual_profile(xs: &[f64], v: &[f64], p: &[f64], params: &ModelParams) -> Vec<(f64, f64)> {
    let n = xs.len();
    let s2 = params.sigma * params.sigma;
    (1..n - 1)
        .map(|i| {
            let (hm, hp) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
            let d1 = |y: &[f64]| crate::det::centered_slope(xs[i - 1], xs[i], xs[i + 1], y[i - 1], y[i], y[i + 1]);
            let d2 = |y: &[f64]| 2.0 * (hm * y[i + 1] - (hm + hp) * y[i] + hp * y[i - 1]) / (hm * hp * (hm + hp));
            let x = xs[i];
            let e = params.hamiltonian_unchecked(x, d1(v).max(0.0), p[i], SigmaMode::Stochastic);
            let diff = 0.5 * s2 * x * x;
            let rv = params.r * v[i] - e.h - diff * d2(v);
            let rp = params.lender_rate() * (p[i] - 1.0) - e.h_xi * d1(p) - diff * d2(p);
            (rv, rp)
        })
        .collect()
}

pub fn stoch_residual(sol: &EquilibriumSolution, params: &ModelParams) -> f64 {
    stoch_residual_profile(&sol.xs, &sol.v, &sol.p, params)
        .into_iter()
        .map(|(a, b)| a.abs().max(b.abs()))
        .fold(0.0, f64::max)
}
