//! Behaviour of the borrower's cost as the bankruptcy threshold grows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, RecoveryFunction, TailProduct};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `theta(s) s -> inf`: the cost tends to zero as `x*` grows.
    CostVanishes,
    /// Bounded `theta(s) s` and `theta'/theta + 1/s >= 0`: the cost decreases in
    /// `x*` to a positive limit.
    MonotonePositive,
    /// Bounded `theta(s) s` and `delta theta'/theta + 1/s < 0`: some finite
    /// threshold is optimal.
    InteriorOptimum,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::CostVanishes => "cost_vanishes",
            Regime::MonotonePositive => "monotone_positive",
            Regime::InteriorOptimum => "interior_optimum",
        }
    }
}

/// Evidence behind a classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeBasis {
    /// `lim theta(s) s`; `None` when infinite.
    pub tail_product: Option<f64>,
    /// `theta'/theta + 1/s >= 0` and `theta' <= 0` at every sampled large `s`.
    pub log_slope_nonneg: bool,
    /// A `delta in (0,1)` with `delta theta'/theta + 1/s < 0` at every sampled
    /// large `s`, if one was found.
    pub delta: Option<f64>,
    /// Smallest sampled ratio.
    pub sample_from: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeTag {
    pub tag: Regime,
    pub basis: RegimeBasis,
}

/// Large ratios on which the tail conditions are checked: a geometric ladder
/// from past the cap of `theta` (or past `x*`) up to `1e6` times that.
fn tail_samples(params: &ModelParams) -> Vec<f64> {
    let start = match params.recovery {
        RecoveryFunction::PowerCap { r0, alpha } => r0.powf(1.0 / alpha).max(1.0) * 2.0,
        RecoveryFunction::LinearSupport { m2_support } => m2_support * 2.0,
        RecoveryFunction::Constant { .. } => 1.0,
    }
    .max(params.x_star);
    (0..=60).map(|i| start * 10f64.powf(i as f64 / 10.0)).collect()
}

pub fn classify_regime(params: &ModelParams) -> Result<RegimeTag> {
    params.validate()?;
    let samples = tail_samples(params);
    let th = &params.recovery;
    let ratios: Option<Vec<(f64, f64)>> = samples
        .iter()
        .map(|&s| {
            let t = th.theta(s);
            (t > 0.0).then(|| (s, th.theta_prime(s) / t))
        })
        .collect();
    let tail_product = match th.tail_product() {
        TailProduct::Finite(c) => Some(c),
        TailProduct::Infinite => None,
    };
    let log_slope_nonneg =
        ratios.as_ref().is_some_and(|rs| rs.iter().all(|&(s, q)| q + 1.0 / s >= -1e-12 && th.theta_prime(s) <= 0.0));
    // For the power cap theta'/theta = -alpha/s, so (1 + 1/alpha)/2 is the
    // natural witness; it is checked on the samples rather than trusted.
    let delta = match (*th, &ratios) {
        (RecoveryFunction::PowerCap { alpha, .. }, Some(rs)) if alpha > 1.0 => {
            let d = 0.5 * (1.0 + 1.0 / alpha);
            rs.iter().all(|&(s, q)| d * q + 1.0 / s < 0.0).then_some(d)
        }
        _ => None,
    };
    let basis = RegimeBasis { tail_product, log_slope_nonneg, delta, sample_from: samples[0] };
    let tag = match tail_product {
        None => Regime::CostVanishes,
        Some(_) if ratios.is_none() => {
            return Err(Error::Unclassifiable(format!(
                "recovery '{}' vanishes at large ratios; theta'/theta is undefined there",
                th.kind_name()
            )))
        }
        Some(_) if log_slope_nonneg => Regime::MonotonePositive,
        Some(_) if delta.is_some() => Regime::InteriorOptimum,
        Some(_) => {
            return Err(Error::Unclassifiable(format!(
                "neither tail condition resolves for recovery '{}'",
                th.kind_name()
            )))
        }
    };
    Ok(RegimeTag { tag, basis })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(rec: RecoveryFunction) -> ModelParams {
        let mut m = ModelParams::benchmark(100.0, 0.0);
        m.recovery = rec;
        m
    }

    #[test]
    fn power_cap_families() {
        let t = classify_regime(&with(RecoveryFunction::power_cap(5.0, 0.5))).unwrap();
        assert_eq!(t.tag, Regime::CostVanishes);
        assert_eq!(t.basis.tail_product, None);
        let t = classify_regime(&with(RecoveryFunction::power_cap(5.0, 1.0))).unwrap();
        assert_eq!(t.tag, Regime::MonotonePositive);
        assert_eq!(t.basis.tail_product, Some(5.0));
        let t = classify_regime(&with(RecoveryFunction::power_cap(5.0, 2.0))).unwrap();
        assert_eq!(t.tag, Regime::InteriorOptimum);
        assert_eq!(t.basis.delta, Some(0.75));
        assert!(!t.basis.log_slope_nonneg);
    }

    #[test]
    fn other_families() {
        let t = classify_regime(&with(RecoveryFunction::Constant { value: 0.3 })).unwrap();
        assert_eq!(t.tag, Regime::CostVanishes);
        assert!(matches!(
            classify_regime(&with(RecoveryFunction::LinearSupport { m2_support: 40.0 })),
            Err(Error::Unclassifiable(_))
        ));
    }
}
