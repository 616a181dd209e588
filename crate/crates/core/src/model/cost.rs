//! Running cost `L(u)` of devoting a fraction `u` of income to debt service.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{bisect, BISECT_TOL};

/// Convex barrier cost on `[0, 1)` with `L(0) = 0` and `L(u) -> +inf` as `u -> 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunction {
    /// `L(u) = c ln(1 / (1 - u))`
    LogBarrier { c: f64 },
    /// `L(u) = c u / (1 - u)^alpha`
    PowerBarrier { c: f64, alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEval {
    pub value: f64,
    pub slope: f64,
}

impl CostFunction {
    pub fn log_barrier(c: f64) -> Self {
        CostFunction::LogBarrier { c }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CostFunction::LogBarrier { .. } => "log_barrier",
            CostFunction::PowerBarrier { .. } => "power_barrier",
        }
    }

    pub fn scale(&self) -> f64 {
        match *self {
            CostFunction::LogBarrier { c } | CostFunction::PowerBarrier { c, .. } => c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CostFunction::LogBarrier { c } if c > 0.0 && c.is_finite() => Ok(()),
            CostFunction::PowerBarrier { c, alpha } if c > 0.0 && c.is_finite() && alpha > 0.0 && alpha.is_finite() => {
                Ok(())
            }
            _ => Err(Error::Validation("cost.c (and cost.alpha) must be positive and finite".into())),
        }
    }

    /// `L(u)`. Callers guarantee `0 <= u < 1`.
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            CostFunction::LogBarrier { c } => -c * (-u).ln_1p(),
            CostFunction::PowerBarrier { c, alpha } => c * u / (1.0 - u).powf(alpha),
        }
    }

    /// `L'(u)`.
    #[inline]
    pub fn slope(&self, u: f64) -> f64 {
        match *self {
            CostFunction::LogBarrier { c } => c / (1.0 - u),
            CostFunction::PowerBarrier { c, alpha } => c * (1.0 + (alpha - 1.0) * u) / (1.0 - u).powf(alpha + 1.0),
        }
    }

    /// `L'(0)`, the marginal cost of the first unit of repayment.
    pub fn slope_at_zero(&self) -> f64 {
        self.scale()
    }

    pub fn eval(&self, u: f64) -> Result<CostEval> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("control u = {u} outside [0, 1)")));
        }
        Ok(CostEval { value: self.value(u), slope: self.slope(u) })
    }

    /// `(L')^{-1}(y)` extended by `0` below `L'(0)`.
    #[inline]
    pub(crate) fn slope_inverse_unchecked(&self, y: f64) -> f64 {
        let c = self.scale();
        if y <= c {
            return 0.0;
        }
        match *self {
            CostFunction::LogBarrier { c } => 1.0 - c / y,
            CostFunction::PowerBarrier { c, alpha: 1.0 } => 1.0 - (c / y).sqrt(),
            CostFunction::PowerBarrier { .. } => self.slope_inverse_bisect(y),
        }
    }

    /// Root of `L'(u) = y` by bisection; the fallback for families without a
    /// closed-form inverse.
    pub(crate) fn slope_inverse_bisect(&self, y: f64) -> f64 {
        // L' is increasing, so push the upper end toward 1 until L'(hi) > y.
        let mut gap = 0.5;
        while self.slope(1.0 - gap) <= y {
            gap *= 0.5;
            if gap < 1e-300 {
                return 1.0 - f64::EPSILON;
            }
        }
        bisect(|u| self.slope(u) - y, 0.0, 1.0 - gap, BISECT_TOL).unwrap_or(1.0 - gap)
    }

    pub fn slope_inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("marginal cost y = {y} must be positive")));
        }
        Ok(self.slope_inverse_unchecked(y))
    }

    /// `-min_{w in [0,1]} { L(w) - eta w }` is the convex conjugate; this returns
    /// the minimizer together with the minimum value `L(w*) - eta w*`.
    #[inline]
    pub(crate) fn min_affine(&self, eta: f64) -> (f64, f64) {
        let w = self.slope_inverse_unchecked(eta);
        if w == 0.0 {
            (0.0, 0.0)
        } else {
            (w, self.value(w) - eta * w)
        }
    }
}
