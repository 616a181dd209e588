//! Salvage fraction `theta(s)` paid to lenders when bankruptcy is declared at
//! debt-to-income ratio `s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecoveryFunction {
    /// `theta(s) = min{1, r0 / s^alpha}`: collateral `r0` shared among creditors.
    PowerCap { r0: f64, alpha: f64 },
    /// `theta(s) = max{0, 1 - s / m2_support}`, zero beyond the support.
    LinearSupport { m2_support: f64 },
    /// `theta(s) = value`.
    Constant { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryEval {
    pub theta: f64,
    pub theta_prime: f64,
}

/// Behavior of `theta(s) s` as `s -> +inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailProduct {
    Finite(f64),
    Infinite,
}

impl RecoveryFunction {
    pub fn power_cap(r0: f64, alpha: f64) -> Self {
        RecoveryFunction::PowerCap { r0, alpha }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            RecoveryFunction::PowerCap { .. } => "power_cap",
            RecoveryFunction::LinearSupport { .. } => "linear_support",
            RecoveryFunction::Constant { .. } => "constant",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RecoveryFunction::PowerCap { r0, alpha } => r0 > 0.0 && alpha > 0.0 && r0.is_finite() && alpha.is_finite(),
            RecoveryFunction::LinearSupport { m2_support } => m2_support > 0.0 && m2_support.is_finite(),
            RecoveryFunction::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("recovery parameters out of range: {self:?}")))
        }
    }

    /// `theta(s)` for `s > 0`.
    #[inline]
    pub fn theta(&self, s: f64) -> f64 {
        match *self {
            RecoveryFunction::PowerCap { r0, alpha } => (r0 / s.powf(alpha)).min(1.0),
            RecoveryFunction::LinearSupport { m2_support } => (1.0 - s / m2_support).max(0.0),
            RecoveryFunction::Constant { value } => value,
        }
    }

    /// `theta'(s)`. At a kink the derivative of the uncapped branch is returned.
    pub fn theta_prime(&self, s: f64) -> f64 {
        match *self {
            RecoveryFunction::PowerCap { r0, alpha } => {
                if r0 / s.powf(alpha) > 1.0 {
                    0.0
                } else {
                    -alpha * r0 / s.powf(alpha + 1.0)
                }
            }
            RecoveryFunction::LinearSupport { m2_support } => {
                if s <= m2_support {
                    -1.0 / m2_support
                } else {
                    0.0
                }
            }
            RecoveryFunction::Constant { .. } => 0.0,
        }
    }

    pub fn eval(&self, s: f64) -> Result<RecoveryEval> {
        if !(s > 0.0) {
            return Err(Error::Domain(format!("ratio level s = {s} must be positive")));
        }
        Ok(RecoveryEval { theta: self.theta(s), theta_prime: self.theta_prime(s) })
    }

    /// `lim_{s->inf} theta(s) s`, known in closed form for every family.
    pub fn tail_product(&self) -> TailProduct {
        match *self {
            RecoveryFunction::PowerCap { r0, alpha } => {
                if alpha < 1.0 {
                    TailProduct::Infinite
                } else if alpha == 1.0 {
                    TailProduct::Finite(r0)
                } else {
                    TailProduct::Finite(0.0)
                }
            }
            RecoveryFunction::LinearSupport { .. } => TailProduct::Finite(0.0),
            RecoveryFunction::Constant { value } => {
                if value > 0.0 {
                    TailProduct::Infinite
                } else {
                    TailProduct::Finite(0.0)
                }
            }
        }
    }
}
