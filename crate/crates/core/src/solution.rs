use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Deterministic,
    Stochastic,
}

impl SolveMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMode::Deterministic => "det",
            SolveMode::Stochastic => "stoch",
        }
    }
}

/// Data at the deterministic hold point `x1`, where the bond price jumps from
/// `1` (left) to `p_B(x1)` (right).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoldPoint {
    pub x1: f64,
    /// Index of `x1` in the solution grid.
    pub index: usize,
    /// `p_B(x1+)`.
    pub p_right: f64,
    /// Feedback control just right of `x1`.
    pub u_right: f64,
}

/// Tabulated equilibrium `(V, p, u*)` on an ascending grid of `[0, x*]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub xs: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub u: Vec<f64>,
    /// Hold point of a deterministic solution (`Some(0.0)` when there is none).
    pub x1: Option<f64>,
    pub hold: Option<HoldPoint>,
    pub mode: SolveMode,
    pub residual: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl EquilibriumSolution {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_star(&self) -> f64 {
        *self.xs.last().expect("empty solution")
    }

    /// Index `i` with `xs[i] <= x < xs[i+1]`, clamped to the grid.
    fn bracket(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&g| g <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }

    fn lerp(&self, ys: &[f64], x: f64) -> f64 {
        let i = self.bracket(x);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        ys[i] + t * (ys[i + 1] - ys[i])
    }

    /// Linear interpolation of `V`.
    pub fn value_at(&self, x: f64) -> f64 {
        self.lerp(&self.v, x)
    }

    /// Bond price and feedback control at `x`, using the right limits at a
    /// hold point for `x > x1`.
    pub fn feedback_at(&self, x: f64) -> (f64, f64) {
        if let Some(h) = self.hold {
            if x == h.x1 {
                return (self.p[h.index], self.u[h.index]);
            }
            if x > h.x1 && h.index + 1 < self.xs.len() && x <= self.xs[h.index + 1] {
                let (x0, x1) = (self.xs[h.index], self.xs[h.index + 1]);
                let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                let p = h.p_right + t * (self.p[h.index + 1] - h.p_right);
                let u = h.u_right + t * (self.u[h.index + 1] - h.u_right);
                return (p, u);
            }
        }
        (self.lerp(&self.p, x), self.lerp(&self.u, x))
    }

    /// Bond price at `x` (right limit past a hold point).
    pub fn price_at(&self, x: f64) -> f64 {
        self.feedback_at(x).0
    }
}
