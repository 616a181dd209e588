//! Pointwise Hamiltonian of the borrower's control problem and the quantities
//! derived from it.
//!
//! With `eta = xi / p` (marginal cost of debt per unit of bond price) the
//! Hamiltonian factors as
//!
//! ```text
//! H(x, xi, p) = min_w { L(w) - eta w } + k(p) x eta,   k(p) = (lambda + r) - (lambda + mu - s2) p
//! H_xi        = (k(p) x - w*) / p
//! ```
//!
//! where `s2 = sigma^2` in the stochastic model and `0` in the deterministic one.
//! The `eta` form stays regular as `p -> 0`, which the deterministic solver uses
//! when `theta(x*) = 0`.

use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};
use crate::roots::{bisect, expand_upper};

/// Whether the `sigma^2` Ito correction enters the drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    Stochastic,
    Deterministic,
}

/// A value on `[0, +inf]` with an explicit marker for `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }

    /// `self > v`, with `Infinite` larger than every float.
    pub fn exceeds(self, v: f64) -> bool {
        match self {
            Extended::Finite(a) => a > v,
            Extended::Infinite => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianEval {
    pub h: f64,
    pub h_xi: f64,
    /// The minimizing control `w*`.
    pub control: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryPoint {
    /// Control that keeps the debt ratio constant.
    pub u_sharp: f64,
    /// `argmax_xi H(x, xi, p)`.
    pub xi_sharp: Extended,
    /// `sup_xi H(x, xi, p)`.
    pub h_max: Extended,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRoots {
    pub f_minus: f64,
    pub f_plus: Option<f64>,
}

/// Relative slack for declaring `rV = H_max`.
const APEX_REL_TOL: f64 = 1e-12;

impl ModelParams {
    #[inline]
    fn s2(&self, mode: SigmaMode) -> f64 {
        match mode {
            SigmaMode::Stochastic => self.sigma * self.sigma,
            SigmaMode::Deterministic => 0.0,
        }
    }

    /// `k(p) = p * a(p)`, with `a(p) = (lambda + r)/p - lambda + s2 - mu` the
    /// drift coefficient of the uncontrolled ratio.
    #[inline]
    pub fn drift_scaled(&self, p: f64, mode: SigmaMode) -> f64 {
        (self.lambda + self.r) - (self.lambda + self.mu - self.s2(mode)) * p
    }

    /// `a(p)`.
    #[inline]
    pub fn drift_coef(&self, p: f64, mode: SigmaMode) -> f64 {
        (self.lambda + self.r) / p - self.lambda + self.s2(mode) - self.mu
    }

    /// `H` in the `eta = xi/p` parametrization. Valid for `p` in `[0, 1]`.
    /// Returns `(H, w*)`.
    #[inline]
    pub(crate) fn hamiltonian_eta(&self, x: f64, eta: f64, p: f64, mode: SigmaMode) -> (f64, f64) {
        let (w, m) = self.cost.min_affine(eta);
        (m + self.drift_scaled(p, mode) * x * eta, w)
    }

    pub fn optimal_control(&self, xi: f64, p: f64) -> Result<f64> {
        check_price(p)?;
        if !(xi >= 0.0) {
            return Err(Error::Domain(format!("costate xi = {xi} must be >= 0")));
        }
        Ok(self.cost.slope_inverse_unchecked(xi / p))
    }

    pub fn hamiltonian(&self, x: f64, xi: f64, p: f64, mode: SigmaMode) -> Result<HamiltonianEval> {
        check_price(p)?;
        if !(xi >= 0.0) {
            return Err(Error::Domain(format!("costate xi = {xi} must be >= 0")));
        }
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("ratio x = {x} must be >= 0")));
        }
        Ok(self.hamiltonian_unchecked(x, xi, p, mode))
    }

    #[inline]
    pub(crate) fn hamiltonian_unchecked(&self, x: f64, xi: f64, p: f64, mode: SigmaMode) -> HamiltonianEval {
        let eta = xi / p;
        let (h, w) = self.hamiltonian_eta(x, eta, p, mode);
        let h_xi = (self.drift_scaled(p, mode) * x - w) / p;
        HamiltonianEval { h, h_xi, control: w }
    }

    /// Stationary control and maximum of the deterministic Hamiltonian.
    pub fn stationary_point(&self, x: f64, p: f64) -> Result<StationaryPoint> {
        check_price(p)?;
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("ratio x = {x} must be >= 0")));
        }
        let (u_sharp, eta_sharp, h_max) = self.apex_eta(x, p);
        Ok(StationaryPoint {
            u_sharp,
            xi_sharp: match eta_sharp {
                Extended::Finite(e) => Extended::Finite(p * e),
                Extended::Infinite => Extended::Infinite,
            },
            h_max,
        })
    }

    /// `(u_sharp, eta_sharp, H_max)` of the deterministic Hamiltonian; `p` in `[0, 1]`.
    #[inline]
    pub(crate) fn apex_eta(&self, x: f64, p: f64) -> (f64, Extended, Extended) {
        let u_sharp = self.drift_scaled(p, SigmaMode::Deterministic) * x;
        if u_sharp >= 1.0 {
            (u_sharp, Extended::Infinite, Extended::Infinite)
        } else {
            (u_sharp, Extended::Finite(self.cost.slope(u_sharp)), Extended::Finite(self.cost.value(u_sharp)))
        }
    }

    /// Roots of `H(x, ., p) = rV` in the deterministic model: `F-` on the
    /// increasing side of the apex and `F+` on the decreasing side.
    pub fn branch_f(&self, x: f64, v: f64, p: f64) -> Result<BranchRoots> {
        check_price(p)?;
        let (lo, hi) = self.branch_eta(x, v, p)?;
        Ok(BranchRoots { f_minus: p * lo, f_plus: hi.map(|e| p * e) })
    }

    /// `F-` and `F+` divided by `p`. Valid for `p` in `[0, 1]`.
    pub(crate) fn branch_eta(&self, x: f64, v: f64, p: f64) -> Result<(f64, Option<f64>)> {
        let lo = self.eta_minus(x, v, p)?;
        let (_, eta_sharp, h_max) = self.apex_eta(x, p);
        let rv = self.r * v;
        let hi = match (eta_sharp, h_max) {
            (Extended::Finite(es), Extended::Finite(hm)) => {
                if rv >= hm {
                    Some(es)
                } else {
                    let k = self.drift_scaled(p, SigmaMode::Deterministic);
                    let g = |eta: f64| self.hamiltonian_eta(x, eta, p, SigmaMode::Deterministic).0 - rv;
                    let upper = expand_upper(|e| g(e) < 0.0, 2.0 * es.max(1.0))
                        .ok_or_else(|| Error::Domain(format!("no F+ bracket at x = {x}, k = {k}")))?;
                    bisect(g, es, upper, tol_eta(es))
                        .map(Some)
                        .ok_or_else(|| Error::Domain(format!("F+ bracket failed at x = {x}")))?
                }
            }
            _ => None,
        };
        Ok((lo, hi))
    }

    /// Smallest `eta >= 0` with `H(x, p eta, p) = rV` (deterministic model).
    pub(crate) fn eta_minus(&self, x: f64, v: f64, p: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("ratio x = {x} must be >= 0")));
        }
        if !(v >= 0.0) {
            return Err(Error::Domain(format!("value V = {v} must be >= 0")));
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        if x == 0.0 {
            return Err(Error::Domain("F- undefined at x = 0 with V > 0".into()));
        }
        let rv = self.r * v;
        let (_, eta_sharp, h_max) = self.apex_eta(x, p);
        if let Extended::Finite(hm) = h_max {
            if rv > hm * (1.0 + APEX_REL_TOL) {
                return Err(Error::Infeasible { x, p, rv, h_max: hm });
            }
        }
        let k = self.drift_scaled(p, SigmaMode::Deterministic);
        let l0 = self.cost.slope_at_zero();
        let eta_lin = rv / (k * x);
        if eta_lin <= l0 {
            return Ok(eta_lin);
        }
        let g = |eta: f64| self.hamiltonian_eta(x, eta, p, SigmaMode::Deterministic).0 - rv;
        let upper = match (eta_sharp, h_max) {
            (Extended::Finite(es), Extended::Finite(hm)) => {
                if rv >= hm {
                    return Ok(es);
                }
                es
            }
            _ => expand_upper(|e| g(e) >= 0.0, 2.0 * l0)
                .ok_or_else(|| Error::Domain(format!("no F- bracket at x = {x}")))?,
        };
        bisect(g, l0, upper, tol_eta(upper))
            .ok_or_else(|| Error::Domain(format!("F- bracket failed at x = {x}, V = {v}, p = {p}")))
    }

    /// `G-(x, V, p)`, the slope of the bond price on the `F-` branch.
    pub fn slope_g_minus(&self, x: f64, v: f64, p: f64) -> Result<f64> {
        check_price(p)?;
        let eta = self.eta_minus(x, v, p)?;
        let numer = self.lender_rate() * (p - 1.0);
        if numer == 0.0 {
            return Ok(0.0);
        }
        let w = self.cost.slope_inverse_unchecked(eta);
        let h_xi = (self.drift_scaled(p, SigmaMode::Deterministic) * x - w) / p;
        if h_xi.abs() <= 1e-14 {
            return Err(Error::Singularity { x, v, p, h_xi });
        }
        Ok(numer / h_xi)
    }

    /// `(V', p')` on the `F-` branch in the deterministic model, regular on
    /// `p` in `[0, 1]`. The price slope is written as `(r+lambda)(p-1) p / (p H_xi)`.
    pub(crate) fn minus_branch_rhs(&self, x: f64, v: f64, p: f64) -> Result<(f64, f64)> {
        let eta = self.eta_minus(x, v, p)?;
        let w = self.cost.slope_inverse_unchecked(eta);
        let denom = self.drift_scaled(p, SigmaMode::Deterministic) * x - w;
        let numer = self.lender_rate() * (p - 1.0) * p;
        let dp = if numer == 0.0 {
            0.0
        } else if denom <= 1e-14 {
            return Err(Error::Singularity { x, v, p, h_xi: if p > 0.0 { denom / p } else { denom } });
        } else {
            numer / denom
        };
        Ok((p * eta, dp))
    }

    /// Cost of holding the ratio at `x` forever with `p = 1`.
    pub fn steady_cost_w(&self, x: f64) -> Extended {
        let u = (self.r - self.mu) * x;
        if u >= 1.0 {
            Extended::Infinite
        } else {
            Extended::Finite(self.cost.value(u.max(0.0)) / self.r)
        }
    }
}

#[inline]
fn tol_eta(scale: f64) -> f64 {
    1e-13 * scale.max(1.0)
}

fn check_price(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("bond price p = {p} must lie in (0, 1]")))
    }
}
