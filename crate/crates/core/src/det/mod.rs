//! Deterministic (`sigma = 0`) equilibrium.
//!
//! The construction runs in three stages:
//!
//! 1. integrate `V' = F-(x, V, p)`, `p' = G-(x, V, p)` backward from
//!    `(V, p)(x*) = (B, theta(x*))`, watching for the first point `x1` where the
//!    cost `W(x)` of holding the debt constant drops to `V_B(x)`;
//! 2. below `x1`, integrate `V' = F-(x, V, 1)` backward from `V(x1) = W(x1)`;
//! 3. glue: `V = V1` and `p = 1` on `[0, x1]`, `(V_B, p_B)` on `(x1, x*]`, and the
//!    control that holds the ratio at `x1` itself.

mod integrate;
mod rk;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, SigmaMode};
use crate::solution::{EquilibriumSolution, HoldPoint, SolveMode};
use integrate::{integrate_down, refine_event, EventBracket, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetSolverConfig {
    /// Number of nodes of the uniform output grid (the hold point is added).
    pub n_grid: usize,
    /// Relative tolerance of the adaptive integrator.
    pub rk_tol: f64,
    /// Integration stops at `x_min_frac * x*`; boundary data fill the rest.
    pub x_min_frac: f64,
    /// Bisection tolerance for the hold point.
    pub crossing_tol: f64,
}

impl Default for DetSolverConfig {
    fn default() -> Self {
        DetSolverConfig { n_grid: 1024, rk_tol: 1e-10, x_min_frac: 1e-4, crossing_tol: 1e-12 }
    }
}

impl DetSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid < 16 {
            return Err(Error::Validation("det.n_grid must be >= 16".into()));
        }
        if !(self.rk_tol > 0.0 && self.rk_tol <= 1e-4) {
            return Err(Error::Validation("det.rk_tol must lie in (0, 1e-4]".into()));
        }
        if !(self.x_min_frac > 0.0 && self.x_min_frac < 0.01) {
            return Err(Error::Validation("det.x_min_frac must lie in (0, 0.01)".into()));
        }
        if !(self.crossing_tol > 0.0) {
            return Err(Error::Validation("det.crossing_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn uniform_grid(&self, x_star: f64) -> Vec<f64> {
        let n = self.n_grid;
        (0..n).map(|i| if i + 1 == n { x_star } else { x_star * i as f64 / (n - 1) as f64 }).collect()
    }
}

/// Output of the backward `(V_B, p_B)` integration, tabulated at the uniform
/// grid nodes it passed, in descending order of `x`.
#[derive(Debug, Clone)]
pub struct BackwardBranch {
    pub xs: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    /// Where the integration ended: the stop abscissa, or the start of the
    /// step that crossed `W`.
    pub x_end: f64,
    pub x_stop: f64,
    crossing: Option<EventBracket<2>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl BackwardBranch {
    pub fn crossed(&self) -> bool {
        self.crossing.is_some()
    }
}

/// Holding cost `W - V`, `+inf` where `W` is infinite.
fn hold_gap(params: &ModelParams, x: f64, v: f64) -> f64 {
    params.steady_cost_w(x).finite().map_or(f64::INFINITY, |w| w - v)
}

fn check_det_hypotheses(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.sigma != 0.0 {
        return Err(Error::Hypothesis("the deterministic solver requires sigma = 0".into()));
    }
    if !params.steady_cost_w(params.x_star).exceeds(params.b) {
        return Err(Error::Hypothesis(format!(
            "requires L((r - mu) x*) > r B; holding x* = {} forever costs no more than bankruptcy",
            params.x_star
        )));
    }
    Ok(())
}

/// Descending output abscissae strictly below `from`, ending at `x_stop`.
fn targets_below(grid: &[f64], from: f64, x_stop: f64) -> Vec<f64> {
    let mut t: Vec<f64> = grid.iter().rev().copied().filter(|&x| x < from && x > x_stop).collect();
    t.push(x_stop);
    t
}

fn branch_rhs(params: &ModelParams) -> impl Fn(f64, &[f64; 2]) -> Result<[f64; 2]> + '_ {
    move |x, y| {
        let (dv, dp) = params.minus_branch_rhs(x, y[0].max(0.0), y[1].clamp(0.0, 1.0))?;
        Ok([dv, dp])
    }
}

pub fn solve_vb_pb(params: &ModelParams, cfg: &DetSolverConfig) -> Result<BackwardBranch> {
    check_det_hypotheses(params)?;
    cfg.validate()?;
    let x_star = params.x_star;
    let x_stop = cfg.x_min_frac * x_star;
    let grid = cfg.uniform_grid(x_star);
    let targets = targets_below(&grid, x_star, x_stop);
    let tol = Tolerances { rtol: cfg.rk_tol, atol: [cfg.rk_tol * params.b, cfg.rk_tol] };
    let f = branch_rhs(params);
    let event = |x: f64, y: &[f64; 2]| hold_gap(params, x, y[0]);
    let traj = integrate_down(&f, x_star, [params.b, params.theta_star()], &targets, &tol, Some(event))?;
    let x_end = traj.event.map_or(*traj.xs.last().unwrap(), |b| b.x);
    Ok(BackwardBranch {
        v: traj.ys.iter().map(|y| y[0]).collect(),
        p: traj.ys.iter().map(|y| y[1]).collect(),
        xs: traj.xs,
        x_end,
        x_stop,
        crossing: traj.event,
        accepted_steps: traj.accepted,
        rejected_steps: traj.rejected,
    })
}

/// `x1 = inf { x : V_B(x) < W(x) }`, or `0` when the backward branch never
/// meets `W` above the stop abscissa. Returns `x1` with `(V_B, p_B)(x1)`.
pub fn find_x1(branch: &BackwardBranch, params: &ModelParams, cfg: &DetSolverConfig) -> Result<(f64, f64, f64)> {
    match &branch.crossing {
        None => Ok((0.0, 0.0, 1.0)),
        Some(b) => {
            let f = branch_rhs(params);
            let event = |x: f64, y: &[f64; 2]| hold_gap(params, x, y[0]);
            let (x1, y) = refine_event(&f, b, event, cfg.crossing_tol)?;
            Ok((x1, y[0], y[1]))
        }
    }
}

/// Width of the graded layer left of `x1`, in uniform grid spacings.
const HOLD_LAYER_CELLS: f64 = 16.0;
/// Growth ratio of consecutive node distances from `x1` inside the layer.
const HOLD_LAYER_RATIO: f64 = 1.0 + 1.0 / 16.0;

/// Output nodes strictly below `x1`, descending. `V1'` has a square-root
/// singularity at `x1` (it starts on the apex of the Hamiltonian), so the
/// uniform nodes next to `x1` are replaced by a geometrically graded layer.
pub fn v1_nodes(x1: f64, x_star: f64, cfg: &DetSolverConfig) -> Vec<f64> {
    let h = x_star / (cfg.n_grid - 1) as f64;
    // The layer starts on a uniform node so the spacing is continuous there.
    let anchor = ((x1 - HOLD_LAYER_CELLS * h) / h).floor().max(0.0) * h;
    let width = if anchor > 0.0 { x1 - anchor } else { 0.5 * x1 };
    let mut nodes = Vec::new();
    let mut d = width / HOLD_LAYER_RATIO;
    while d >= h / 32.0 {
        nodes.push(x1 - d);
        d /= HOLD_LAYER_RATIO;
    }
    nodes.extend(cfg.uniform_grid(x_star).into_iter().filter(|&x| x <= x1 - width + 1e-9 * h));
    nodes.sort_by(|a, b| b.partial_cmp(a).unwrap());
    nodes.dedup();
    nodes
}

/// `V1` on `[x_stop, x1]`: `V' = F-(x, V, 1)`, `V(x1) = W(x1)`. Descending,
/// tabulated at [`v1_nodes`] above the stop abscissa.
pub fn solve_v1(x1: f64, params: &ModelParams, cfg: &DetSolverConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(x1 > 0.0) {
        return Err(Error::Domain(format!("hold point x1 = {x1} must be positive")));
    }
    let w1 =
        params.steady_cost_w(x1).finite().ok_or_else(|| Error::Domain(format!("W(x1) is infinite at x1 = {x1}")))?;
    let x_stop = (cfg.x_min_frac * params.x_star).min(x1 * 0.5);
    let mut targets: Vec<f64> = v1_nodes(x1, params.x_star, cfg).into_iter().filter(|&x| x > x_stop).collect();
    targets.push(x_stop);
    let tol = Tolerances { rtol: cfg.rk_tol, atol: [cfg.rk_tol * params.b] };
    let f = |x: f64, y: &[f64; 1]| -> Result<[f64; 1]> {
        let v = y[0].max(0.0);
        // At the start V sits on the apex; tiny overshoots are pulled back.
        let v = match params.steady_cost_w(x).finite() {
            Some(w) => v.min(w),
            None => v,
        };
        Ok([params.eta_minus(x, v, 1.0)?])
    };
    let traj = integrate_down::<_, fn(f64, &[f64; 1]) -> f64, 1>(&f, x1, [w1], &targets, &tol, None)?;
    Ok((traj.xs, traj.ys.iter().map(|y| y[0]).collect()))
}

fn control_on_branch(params: &ModelParams, x: f64, v: f64, p: f64) -> f64 {
    params
        .eta_minus(x, v.max(0.0), p.clamp(0.0, 1.0))
        .map(|eta| params.cost.slope_inverse_unchecked(eta))
        .unwrap_or(0.0)
}

/// Fills nodes below the last integrated abscissa by linear interpolation
/// toward the boundary data `V(0) = 0`, `p(0) = 1`.
fn extend_to_origin(x: f64, x_last: f64, v_last: f64, p_last: f64) -> (f64, f64) {
    let t = (x / x_last).clamp(0.0, 1.0);
    (t * v_last, 1.0 + t * (p_last - 1.0))
}

fn lookup_desc(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    xs.iter().position(|&g| g == x).map(|i| ys[i])
}

/// Full deterministic equilibrium on the uniform grid plus the hold point.
pub fn assemble_equilibrium(params: &ModelParams, cfg: &DetSolverConfig) -> Result<EquilibriumSolution> {
    let branch = solve_vb_pb(params, cfg)?;
    let (x1, v_b1, p_b1) = find_x1(&branch, params, cfg)?;
    let grid = cfg.uniform_grid(params.x_star);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("x1".to_string(), x1);
    diagnostics.insert("accepted_steps".to_string(), branch.accepted_steps as f64);
    diagnostics.insert("rejected_steps".to_string(), branch.rejected_steps as f64);
    diagnostics.insert("x_stop".to_string(), branch.x_stop);
    diagnostics.insert("m1".to_string(), crate::analysis::threshold_m1(params));

    let mut xs = Vec::with_capacity(grid.len() + 1);
    let mut v = Vec::with_capacity(grid.len() + 1);
    let mut p = Vec::with_capacity(grid.len() + 1);
    let mut u = Vec::with_capacity(grid.len() + 1);
    let mut hold = None;

    if x1 > 0.0 {
        let (v1_xs, v1_vs) = solve_v1(x1, params, cfg)?;
        let (x_last, v_last) = (*v1_xs.last().unwrap(), *v1_vs.last().unwrap());
        let w1 = params.steady_cost_w(x1).finite().unwrap();
        diagnostics.insert("v_b_at_x1".to_string(), v_b1);
        diagnostics.insert("p_b_at_x1".to_string(), p_b1);
        for x in v1_nodes(x1, params.x_star, cfg).into_iter().rev() {
            let val = if x == 0.0 {
                0.0
            } else {
                match lookup_desc(&v1_xs, &v1_vs, x) {
                    Some(val) => val,
                    None => extend_to_origin(x, x_last, v_last, 1.0).0,
                }
            };
            xs.push(x);
            v.push(val);
            p.push(1.0);
            u.push(if x == 0.0 { 0.0 } else { control_on_branch(params, x, val, 1.0) });
        }
        hold =
            Some(HoldPoint { x1, index: xs.len(), p_right: p_b1, u_right: control_on_branch(params, x1, v_b1, p_b1) });
        xs.push(x1);
        v.push(w1);
        p.push(1.0);
        u.push((params.r - params.mu) * x1);
        for &x in grid.iter().filter(|&&x| x > x1 + 1e-12 * params.x_star) {
            let i = branch
                .xs
                .iter()
                .position(|&g| g == x)
                .ok_or_else(|| Error::Domain(format!("node x = {x} missing from the backward branch")))?;
            xs.push(x);
            v.push(branch.v[i]);
            p.push(branch.p[i]);
            u.push(control_on_branch(params, x, branch.v[i], branch.p[i]));
        }
    } else {
        let (x_last, v_last, p_last) =
            (*branch.xs.last().unwrap(), *branch.v.last().unwrap(), *branch.p.last().unwrap());
        for &x in &grid {
            let (vx, px) = if x == 0.0 {
                (0.0, 1.0)
            } else {
                match branch.xs.iter().position(|&g| g == x) {
                    Some(i) => (branch.v[i], branch.p[i]),
                    None => extend_to_origin(x, x_last, v_last, p_last),
                }
            };
            xs.push(x);
            v.push(vx);
            p.push(px);
            u.push(if x == 0.0 || x == params.x_star { 0.0 } else { control_on_branch(params, x, vx, px) });
        }
    }
    // The terminal control is the left limit of the branch control.
    if let Some(last) = u.len().checked_sub(1) {
        if last >= 1 && xs[last] == params.x_star {
            u[last] = control_on_branch(params, params.x_star, params.b, params.theta_star());
        }
    }

    let mut sol = EquilibriumSolution {
        xs,
        v,
        p,
        u,
        x1: Some(x1),
        hold,
        mode: SolveMode::Deterministic,
        residual: 0.0,
        diagnostics,
    };
    sol.residual = det_residual(&sol, params);
    Ok(sol)
}

/// Three-point first derivative on a possibly non-uniform stencil.
pub fn centered_slope(xm: f64, x0: f64, xp: f64, ym: f64, y0: f64, yp: f64) -> f64 {
    let hm = x0 - xm;
    let hp = xp - x0;
    (hm * hm * (yp - y0) + hp * hp * (y0 - ym)) / (hm * hp * (hm + hp))
}

/// Per-node residuals `(|rV - H(x, V', p)|, |(r+lambda)(p-1) - H_xi p'|)` with
/// centered differences; `None` at boundary nodes, within two nodes of the
/// hold point, and where `p = 0` (immediate bankruptcy).
pub fn det_residual_profile(sol: &EquilibriumSolution, params: &ModelParams) -> Vec<Option<(f64, f64)>> {
    let n = sol.xs.len();
    let collar = sol.hold.map(|h| h.index);
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                return None;
            }
            if let Some(k) = collar {
                if i.abs_diff(k) <= 2 {
                    return None;
                }
            }
            let (x, pv) = (sol.xs[i], sol.p[i]);
            if !(pv > 1e-12) {
                return None;
            }
            let dv = centered_slope(sol.xs[i - 1], x, sol.xs[i + 1], sol.v[i - 1], sol.v[i], sol.v[i + 1]);
            let dp = centered_slope(sol.xs[i - 1], x, sol.xs[i + 1], sol.p[i - 1], pv, sol.p[i + 1]);
            let e = params.hamiltonian_unchecked(x, dv.max(0.0), pv.min(1.0), SigmaMode::Deterministic);
            let r1 = (params.r * sol.v[i] - e.h).abs();
            let r2 = (params.lender_rate() * (pv - 1.0) - e.h_xi * dp).abs();
            Some((r1, r2))
        })
        .collect()
}

pub fn det_residual(sol: &EquilibriumSolution, params: &ModelParams) -> f64 {
    det_residual_profile(sol, params).into_iter().flatten().map(|(a, b)| a.max(b)).fold(0.0, f64::max)
}
