//! Explicit sub/supersolution pairs that sandwich the stochastic equilibrium:
//! `V2 <= V <= V1` and `p1 <= p <= p2`.

use serde::{Deserialize, Serialize};

use super::closed_form::implicit_price;
use super::threshold_m1;
use crate::error::{Error, Result};
use crate::model::{Extended, ModelParams, TailProduct};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub x: f64,
    pub p1: f64,
    /// Upper value bound before flattening near the origin.
    pub v1_tilde: f64,
    pub v1: f64,
    pub p2: f64,
    pub v2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSet {
    pub xs: Vec<f64>,
    pub p1: Vec<f64>,
    pub v1: Vec<f64>,
    pub p2: Vec<f64>,
    pub v2: Vec<f64>,
    /// Kink of `p2`: `theta(x*) x* + 2/(r-mu)`.
    pub x2: f64,
    pub m1: f64,
    /// `limsup theta(s) s`.
    pub c1: Extended,
    pub c2: Extended,
    pub m2_lb: Extended,
}

/// Ratio below which the upper value envelope is held constant.
pub fn flattening_point(params: &ModelParams) -> f64 {
    1.0 / (params.r + params.lambda)
}

pub fn envelope_kink(params: &ModelParams) -> f64 {
    params.theta_star() * params.x_star + 2.0 / (params.r - params.mu)
}

fn check_envelope_hypotheses(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    if !(params.sigma > 0.0) {
        return Err(Error::Hypothesis("envelopes need sigma > 0".into()));
    }
    let theta = params.theta_star();
    if !(theta > 0.0) {
        return Err(Error::Hypothesis("envelopes need theta(x*) > 0".into()));
    }
    if theta >= 1.0 {
        return Err(Error::Hypothesis("envelopes need theta(x*) < 1".into()));
    }
    Ok(theta)
}

fn p1_v1_tilde(x: f64, theta: f64, params: &ModelParams) -> Result<(f64, f64)> {
    if x <= 0.0 {
        return Ok((1.0, 0.0));
    }
    let (r, lambda) = (params.r, params.lambda);
    let e = (params.sigma * params.sigma + lambda + r) / (lambda + r);
    let p1 = if x >= params.x_star { theta } else { implicit_price(theta * params.x_star / x, theta, e)? };
    let v1 = params.b * ((1.0 - p1) / (1.0 - theta)).powf(r / (r + lambda));
    Ok((p1, v1))
}

/// All four envelopes at a single ratio.
pub fn envelope_at(x: f64, params: &ModelParams) -> Result<EnvelopePoint> {
    let theta = check_envelope_hypotheses(params)?;
    let (p1, v1_tilde) = p1_v1_tilde(x, theta, params)?;
    let xf = flattening_point(params);
    let v1 = if x < xf { p1_v1_tilde(xf, theta, params)?.1 } else { v1_tilde };
    let x2 = envelope_kink(params);
    let p2 = if x <= x2 { 1.0 } else { x2 / x };
    Ok(EnvelopePoint { x, p1, v1_tilde, v1, p2, v2: (1.0 - p2) * params.b })
}

pub fn stochastic_envelope(params: &ModelParams, grid: &[f64]) -> Result<EnvelopeSet> {
    check_envelope_hypotheses(params)?;
    let pts = grid.iter().map(|&x| envelope_at(x, params)).collect::<Result<Vec<_>>>()?;
    let rm = params.r - params.mu;
    let (c1, c2, m2_lb) = match params.recovery.tail_product() {
        TailProduct::Infinite => (Extended::Infinite, Extended::Infinite, Extended::Infinite),
        TailProduct::Finite(c1) => {
            let l = params.lambda;
            let m2 = (l + params.mu - params.r) / l * c1 + (2.0 * l + params.mu - params.r) / (l * rm) + 1.0;
            (Extended::Finite(c1), Extended::Finite(c1 + 2.0 / rm), Extended::Finite(m2))
        }
    };
    Ok(EnvelopeSet {
        xs: grid.to_vec(),
        p1: pts.iter().map(|e| e.p1).collect(),
        v1: pts.iter().map(|e| e.v1).collect(),
        p2: pts.iter().map(|e| e.p2).collect(),
        v2: pts.iter().map(|e| e.v2).collect(),
        x2: envelope_kink(params),
        m1: threshold_m1(params),
        c1,
        c2,
        m2_lb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RecoveryFunction;

    fn bench() -> ModelParams {
        ModelParams::benchmark(100.0, 0.1)
    }

    #[test]
    fn spot_values() {
        let m = bench();
        assert!((envelope_kink(&m) - 71.666_666_666_666_67).abs() < 1e-9);
        let e = envelope_at(80.0, &m).unwrap();
        assert!((e.p2 - 0.8958333333).abs() < 1e-9 && (e.v2 - 1.0416666667).abs() < 1e-9);
        let e = envelope_at(50.0, &m).unwrap();
        assert_eq!((e.p2, e.v2), (1.0, 0.0));
        assert!((e.p1 - 0.0950706990).abs() < 1e-9, "{}", e.p1);
        assert!((e.v1 - 9.9032606363).abs() < 1e-8, "{}", e.v1);
    }

    #[test]
    fn limits_at_origin_and_flattening() {
        let m = bench();
        // p1 -> 1 and v1_tilde -> 0, the latter only like a small power of x
        let a = envelope_at(1e-6, &m).unwrap();
        let e = envelope_at(1e-9, &m).unwrap();
        assert!(e.p1 > 1.0 - 1e-6 && e.v1_tilde < a.v1_tilde && e.v1_tilde < 0.2);
        let e0 = envelope_at(0.0, &m).unwrap();
        let ef = envelope_at(4.0, &m).unwrap();
        assert_eq!(e0.v1, ef.v1);
        assert!(ef.v1 > 0.0);
    }

    #[test]
    fn ordering() {
        let m = bench();
        let grid: Vec<f64> = (0..=400).map(|i| 4.0 + 96.0 * i as f64 / 400.0).collect();
        let s = stochastic_envelope(&m, &grid).unwrap();
        for i in 0..grid.len() {
            assert!(s.p1[i] <= s.p2[i] && s.v2[i] <= s.v1[i]);
        }
        assert_eq!(s.c1, Extended::Finite(5.0));
        match s.c2 {
            Extended::Finite(c) => assert!((c - (5.0 + 2.0 / 0.03)).abs() < 1e-12),
            Extended::Infinite => panic!("c2 should be finite"),
        }
    }

    #[test]
    fn upper_envelope_decays_when_recovery_tail_grows() {
        let mut m = bench();
        m.recovery = RecoveryFunction::power_cap(5.0, 0.5);
        let mut prev = f64::INFINITY;
        for xs in [1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8] {
            let v = envelope_at(50.0, &m.with_x_star(xs)).unwrap().v1;
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 3.0);
    }

    #[test]
    fn hypotheses() {
        assert!(envelope_at(1.0, &ModelParams::benchmark(100.0, 0.0)).is_err());
        let mut m = bench();
        m.recovery = RecoveryFunction::Constant { value: 0.0 };
        assert!(envelope_at(1.0, &m).is_err());
    }
}
