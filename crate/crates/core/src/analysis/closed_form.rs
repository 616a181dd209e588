//! Explicit solutions in the zero-control region `[M1, x*]` of the
//! deterministic problem.

use serde::{Deserialize, Serialize};

use super::threshold_m1;
use crate::error::{Error, Result};
use crate::model::{ModelParams, RecoveryFunction};
use crate::roots::{bisect, BISECT_TOL};

/// Price and value at one ratio in the zero-control region, with bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormPoint {
    pub p_b: f64,
    pub v_b: f64,
    /// `z^k / (1 + z^k)` with `z = theta* x* / x`, `k = (r+lambda)/(r-mu)`.
    pub lower_p: f64,
    /// The lower value bound in its published form. It is not a valid bound
    /// (it exceeds `V_B` by O(theta*)); reported for comparison only.
    pub lower_v: f64,
    /// Lower value bound obtained from `p_B <= z (1-theta*)^(-1/k)`.
    pub lower_v_sharp: f64,
    /// `B (x / (theta* x*))^(r/(r-mu))`, capped at `B`.
    pub upper_v: f64,
}

/// Root in `(0, 1)` of `p = z ((1 - p) / (1 - theta))^e`, the implicit price
/// relation shared by the zero-control branch and the stochastic envelope.
pub fn implicit_price(z: f64, theta: f64, e: f64) -> Result<f64> {
    if !(z > 0.0) || !(0.0..1.0).contains(&theta) {
        return Err(Error::Domain(format!("implicit price needs z > 0 and theta in [0,1), got z={z}, theta={theta}")));
    }
    let g = |p: f64| p - z * ((1.0 - p) / (1.0 - theta)).powf(e);
    let (lo, hi) = (1e-14, 1.0 - 1e-14);
    debug_assert!(g(lo) < 0.0 || z < 1e-14);
    bisect(g, lo, hi, BISECT_TOL).ok_or_else(|| Error::Domain(format!("implicit price: no sign change for z = {z}")))
}

fn check_zero_control(x: f64, params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let m1 = threshold_m1(params);
    if x < m1 * (1.0 - 1e-12) || x > params.x_star * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("x = {x} outside the zero-control region [{m1}, {}]", params.x_star)));
    }
    let theta = params.theta_star();
    if theta <= 0.0 {
        return Err(Error::Domain("theta(x*) = 0: use compact_support_default".into()));
    }
    if theta >= 1.0 {
        return Err(Error::Domain("theta(x*) = 1: lenders lose nothing, no bankruptcy premium".into()));
    }
    Ok(theta)
}

pub fn closed_form_region(x: f64, params: &ModelParams) -> Result<ClosedFormPoint> {
    let theta = check_zero_control(x, params)?;
    let (r, lambda, mu, b) = (params.r, params.lambda, params.mu, params.b);
    let z = theta * params.x_star / x;
    let k = (r + lambda) / (r - mu);
    let p_b = if x == params.x_star { theta } else { implicit_price(z, theta, 1.0 / k)? };
    let v_b = b * (p_b / z).powf(r / (r - mu));
    let zk = z.powf(k);
    let p_cap = (z * (1.0 - theta).powf(-1.0 / k)).min(1.0);
    Ok(ClosedFormPoint {
        p_b,
        v_b,
        lower_p: zk / (1.0 + zk),
        lower_v: b * (1.0 + zk).powf(-r / (r + lambda)),
        lower_v_sharp: b * ((1.0 - p_cap) / (1.0 - theta)).powf(r / (r + lambda)).min(1.0),
        upper_v: (b * (1.0 / z).powf(r / (r - mu))).min(b),
    })
}

/// Outcome of the compact-support check: on `[m2_support, x*]` bankruptcy is
/// immediate, `p_B = 0` and `V_B = B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactSupportVerdict {
    pub m2_support: f64,
    pub m1: f64,
    pub interval: (f64, f64),
    pub p_b: f64,
    pub v_b: f64,
}

pub fn compact_support_default(params: &ModelParams) -> Result<CompactSupportVerdict> {
    params.validate()?;
    let m2 = match params.recovery {
        RecoveryFunction::LinearSupport { m2_support } => m2_support,
        RecoveryFunction::Constant { value: 0.0 } => 0.0,
        _ => {
            return Err(Error::Hypothesis(format!(
                "recovery '{}' does not vanish beyond a finite ratio",
                params.recovery.kind_name()
            )))
        }
    };
    let m1 = threshold_m1(params);
    if m2 < m1 {
        return Err(Error::Hypothesis(format!("support endpoint {m2} is below M1 = {m1}")));
    }
    if params.x_star < m2 {
        return Err(Error::Hypothesis(format!("x* = {} is below the support endpoint {m2}", params.x_star)));
    }
    Ok(CompactSupportVerdict { m2_support: m2, m1, interval: (m2, params.x_star), p_b: 0.0, v_b: params.b })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConsistencyGap {
    /// Price at `x*` when bankruptcy is postponed to `2 x*`.
    pub p_at_double: f64,
    pub theta_at_xstar: f64,
    pub gap: f64,
}

/// Price lenders would have charged at `x*` had they known bankruptcy would be
/// postponed to `2 x*`, against the recovery `theta(x*)` they get otherwise.
pub fn time_consistency_gap(params: &ModelParams) -> Result<TimeConsistencyGap> {
    params.validate()?;
    if params.sigma != 0.0 {
        return Err(Error::Domain("time-consistency gap is computed for sigma = 0".into()));
    }
    match params.recovery {
        RecoveryFunction::PowerCap { alpha, .. } if alpha >= 1.0 => {}
        _ => return Err(Error::Domain("time-consistency gap needs power_cap recovery with alpha >= 1".into())),
    }
    let m1 = threshold_m1(params);
    if params.x_star < m1 {
        return Err(Error::Domain(format!("x* = {} is below M1 = {m1}", params.x_star)));
    }
    let doubled = params.with_x_star(2.0 * params.x_star);
    let theta2 = doubled.theta_star();
    let k = (params.r - params.mu) / (params.r + params.lambda);
    let p = implicit_price(2.0 * theta2, theta2, k)?;
    let theta = params.theta_star();
    Ok(TimeConsistencyGap { p_at_double: p, theta_at_xstar: theta, gap: theta - p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_at_fifty() {
        let m = ModelParams::benchmark(100.0, 0.0);
        let c = closed_form_region(50.0, &m).unwrap();
        assert!((c.p_b - 0.0993617459).abs() < 1e-9, "{}", c.p_b);
        assert!((c.v_b - 9.8938507986).abs() < 1e-8, "{}", c.v_b);
        // same value through the price-only form
        let alt = 10.0 * ((1.0 - c.p_b) / 0.95).powf(0.05 / 0.25);
        assert!((alt - c.v_b).abs() < 1e-9);
        assert!(c.lower_p <= c.p_b && c.lower_v_sharp <= c.v_b && c.v_b <= c.upper_v);
        // the published lower bound does not hold here
        assert!(c.lower_v > c.v_b);
    }

    #[test]
    fn terminal_point_and_region() {
        let m = ModelParams::benchmark(100.0, 0.0);
        let c = closed_form_region(100.0, &m).unwrap();
        assert_eq!(c.p_b, 0.05);
        assert!((c.v_b - 10.0).abs() < 1e-12);
        assert!(closed_form_region(30.0, &m).is_err());
        let mut z = m;
        z.recovery = RecoveryFunction::Constant { value: 0.0 };
        assert!(closed_form_region(50.0, &z).is_err());
    }

    #[test]
    fn bounds_hold_across_region() {
        for xs in [40.0, 100.0, 400.0] {
            let m = ModelParams::benchmark(xs, 0.0);
            let mut x = 33.34;
            while x <= xs {
                let c = closed_form_region(x, &m).unwrap();
                assert!(c.lower_p <= c.p_b + 1e-15);
                assert!(c.lower_v_sharp <= c.v_b + 1e-12 && c.v_b <= c.upper_v + 1e-12, "x*={xs} x={x}");
                x += 3.7;
            }
        }
    }

    #[test]
    fn compact_support() {
        let mut m = ModelParams::benchmark(60.0, 0.0);
        m.recovery = RecoveryFunction::LinearSupport { m2_support: 40.0 };
        let v = compact_support_default(&m).unwrap();
        assert_eq!(v.interval, (40.0, 60.0));
        assert_eq!((v.p_b, v.v_b), (0.0, 10.0));
        m.recovery = RecoveryFunction::LinearSupport { m2_support: 20.0 };
        assert!(matches!(compact_support_default(&m), Err(Error::Hypothesis(_))));
        m.recovery = RecoveryFunction::LinearSupport { m2_support: 60.0 };
        assert_eq!(compact_support_default(&m).unwrap().interval, (60.0, 60.0));
    }

    #[test]
    fn postponed_bankruptcy_lowers_price() {
        let m = ModelParams::benchmark(100.0, 0.0);
        let g = time_consistency_gap(&m).unwrap();
        assert!((g.p_at_double - 0.0498453633).abs() < 1e-9);
        assert!((g.gap - 1.546367e-4).abs() < 1e-9);
        let mut m2 = m;
        // alpha = 2 with the same theta(x*) x*
        m2.recovery = RecoveryFunction::power_cap(500.0, 2.0);
        assert!((m2.theta_star() - 0.05).abs() < 1e-15);
        assert!(time_consistency_gap(&m2).unwrap().gap > g.gap);
        m2.recovery = RecoveryFunction::power_cap(5.0, 0.5);
        assert!(time_consistency_gap(&m2).is_err());
    }
}
