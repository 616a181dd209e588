//! Adaptive backward integration through a list of output abscissae, with an
//! optional sign-change event.

use super::rk::{dopri_step, error_norm, StepOutcome};
use crate::error::{Error, Result};
use crate::roots::bisect;

pub(crate) struct Tolerances<const N: usize> {
    pub rtol: f64,
    pub atol: [f64; N],
}

/// The accepted step across which the event function changed sign.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EventBracket<const N: usize> {
    /// Start of the step (event function positive here).
    pub x: f64,
    pub y: [f64; N],
    /// Signed step (negative).
    pub h: f64,
}

pub(crate) struct Trajectory<const N: usize> {
    /// Abscissae in descending order, starting at the initial point.
    pub xs: Vec<f64>,
    pub ys: Vec<[f64; N]>,
    pub event: Option<EventBracket<N>>,
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(x, y)` from `(x0, y0)` downward through every abscissa in
/// `targets` (strictly decreasing, all below `x0`). Stops early at the first
/// accepted step where `event` goes from positive to non-positive.
///
/// A step whose stages leave the domain of `f` is retried at half the size.
pub(crate) fn integrate_down<F, G, const N: usize>(
    f: &F,
    x0: f64,
    y0: [f64; N],
    targets: &[f64],
    tol: &Tolerances<N>,
    event: Option<G>,
) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    G: Fn(f64, &[f64; N]) -> f64,
{
    let mut traj = Trajectory { xs: vec![x0], ys: vec![y0], event: None, accepted: 0, rejected: 0 };
    let span = x0 - targets.last().copied().unwrap_or(x0);
    let h_min = 1e-13 * x0.abs().max(1.0);
    let mut x = x0;
    let mut y = y0;
    let mut h = -(span * 1e-3).max(h_min * 10.0);
    let mut g_prev = event.as_ref().map(|g| g(x, &y));
    let mut last_err: Option<Error> = None;

    for &target in targets {
        while x > target {
            let reach = target - x;
            let hit = h <= reach;
            let step = if hit { reach } else { h };
            if step.abs() < h_min && !hit {
                return Err(last_err.unwrap_or(Error::NoConvergence {
                    steps: traj.accepted,
                    last_update: step.abs(),
                    eps: 0.0,
                }));
            }
            let out: StepOutcome<N> = match dopri_step(f, x, &y, step) {
                Ok(o) => o,
                Err(e) => {
                    traj.rejected += 1;
                    last_err = Some(e);
                    h = 0.5 * step;
                    if h.abs() < h_min {
                        return Err(last_err.unwrap());
                    }
                    continue;
                }
            };
            let err = error_norm(&out, &y, tol.rtol, &tol.atol);
            if !(err <= 1.0) {
                traj.rejected += 1;
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                h = step * fac;
                if h.abs() < h_min {
                    return Err(last_err.unwrap_or(Error::NoConvergence {
                        steps: traj.accepted,
                        last_update: err,
                        eps: 0.0,
                    }));
                }
                continue;
            }
            traj.accepted += 1;
            let x_new = if hit { target } else { x + step };
            if let (Some(g), Some(gp)) = (event.as_ref(), g_prev) {
                let g_new = g(x_new, &out.y);
                if gp > 0.0 && g_new <= 0.0 {
                    traj.event = Some(EventBracket { x, y, h: x_new - x });
                    return Ok(traj);
                }
                g_prev = Some(g_new);
            }
            x = x_new;
            y = out.y;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // Keep the controller's step when we were clipped by a target.
            h = if hit { h.min(step * fac) } else { step * fac };
        }
        traj.xs.push(x);
        traj.ys.push(y);
    }
    Ok(traj)
}

/// Locates the event inside a bracketing step by bisection on the step length,
/// re-integrating from the start of the step with a single Runge–Kutta step.
pub(crate) fn refine_event<F, G, const N: usize>(
    f: &F,
    bracket: &EventBracket<N>,
    event: G,
    tol: f64,
) -> Result<(f64, [f64; N])>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    G: Fn(f64, &[f64; N]) -> f64,
{
    let state = |s: f64| -> Result<[f64; N]> {
        if s == 0.0 {
            Ok(bracket.y)
        } else {
            Ok(dopri_step(f, bracket.x, &bracket.y, -s)?.y)
        }
    };
    let len = bracket.h.abs();
    let g = |s: f64| match state(s) {
        Ok(y) => event(bracket.x - s, &y),
        Err(_) => f64::NAN,
    };
    let s = bisect(g, 0.0, len, tol)
        .ok_or_else(|| Error::Domain(format!("event bracket at x = {} lost its sign change", bracket.x)))?;
    Ok((bracket.x - s, state(s)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_targets_and_stops_at_event() {
        // y' = 1, y(1) = 1  => y = x. Event: y - 0.3.
        let f = |_x: f64, _y: &[f64; 1]| Ok([1.0]);
        let targets: Vec<f64> = (0..10).rev().map(|i| i as f64 / 10.0).collect();
        let tol = Tolerances { rtol: 1e-10, atol: [1e-12] };
        let ev = |_x: f64, y: &[f64; 1]| y[0] - 0.33;
        let t = integrate_down(&f, 1.0, [1.0], &targets, &tol, Some(ev)).unwrap();
        assert!(t.xs.iter().all(|&x| x > 0.33));
        for (x, y) in t.xs.iter().zip(&t.ys) {
            assert!((x - y[0]).abs() < 1e-12);
        }
        let b = t.event.unwrap();
        let (xe, ye) = refine_event(&f, &b, ev, 1e-13).unwrap();
        assert!((xe - 0.33).abs() < 1e-12 && (ye[0] - 0.33).abs() < 1e-12);
    }

    #[test]
    fn retries_outside_domain() {
        // f undefined for x < 0.5 - the integration must still hit 0.5 exactly.
        let f = |x: f64, y: &[f64; 1]| {
            if x < 0.5 {
                Err(Error::Domain("outside".into()))
            } else {
                Ok([y[0]])
            }
        };
        let tol = Tolerances { rtol: 1e-10, atol: [1e-12] };
        let t = integrate_down::<_, fn(f64, &[f64; 1]) -> f64, 1>(&f, 1.0, [1.0], &[0.5], &tol, None).unwrap();
        assert!((t.ys[1][0] - (-0.5f64).exp()).abs() < 1e-9);
    }
}
