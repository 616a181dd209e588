use serde::{Deserialize, Serialize};

use super::{CostFunction, RecoveryFunction};
use crate::error::{Error, Result};

/// Economic constants of the debt-management game.
///
/// Rates are per unit time; `sigma` is per square-root unit time. `x_star` is
/// the debt-to-income ratio at which bankruptcy is declared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Interest rate paid on bonds, equal to the discount rate.
    pub r: f64,
    /// Rate at which principal is repaid.
    pub lambda: f64,
    /// Growth rate of income.
    pub mu: f64,
    /// Volatility of income.
    pub sigma: f64,
    /// Cost to the borrower of declaring bankruptcy.
    pub b: f64,
    pub x_star: f64,
    pub cost: CostFunction,
    pub recovery: RecoveryFunction,
}

impl ModelParams {
    /// The recurring benchmark: `r = 0.05, lambda = 0.2, mu = 0.02, B = 10`,
    /// `L(u) = ln(1/(1-u))`, `theta(s) = min{1, 5/s}`.
    pub fn benchmark(x_star: f64, sigma: f64) -> Self {
        ModelParams {
            r: 0.05,
            lambda: 0.2,
            mu: 0.02,
            sigma,
            b: 10.0,
            x_star,
            cost: CostFunction::log_barrier(1.0),
            recovery: RecoveryFunction::power_cap(5.0, 1.0),
        }
    }

    pub fn with_x_star(&self, x_star: f64) -> Self {
        ModelParams { x_star, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.r, self.lambda, self.mu, self.sigma, self.b, self.x_star].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Validation("model constants must be finite".into()));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::Validation("requires mu >= 0".into()));
        }
        if !(self.r > self.mu) {
            return Err(Error::Validation("requires r > mu".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Validation("requires lambda > 0".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Validation("requires sigma >= 0".into()));
        }
        if !(self.b > 0.0) {
            return Err(Error::Validation("requires B > 0".into()));
        }
        if !(self.x_star > 0.0) {
            return Err(Error::Validation("requires x_star > 0".into()));
        }
        self.cost.validate()?;
        self.recovery.validate()?;
        let th = self.theta_star();
        if !(0.0..=1.0).contains(&th) {
            return Err(Error::Validation(format!("requires theta(x_star) in [0, 1], got {th}")));
        }
        Ok(())
    }

    /// `theta(x*)`, the terminal bond price.
    pub fn theta_star(&self) -> f64 {
        self.recovery.theta(self.x_star)
    }

    /// `r + lambda`, the discount rate applied by lenders.
    pub fn lender_rate(&self) -> f64 {
        self.r + self.lambda
    }
}
