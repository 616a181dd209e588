//! Value at a fixed ratio as a function of the bankruptcy threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_regime, closed_form_region, threshold_m1, RegimeTag};
use crate::det::{assemble_equilibrium, DetSolverConfig};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::solution::SolveMode;
use crate::stoch::{solve_stochastic, StochSolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub mode: SolveMode,
    pub det: DetSolverConfig,
    pub stoch: StochSolverConfig,
}

impl SweepOptions {
    pub fn for_params(params: &ModelParams) -> Self {
        SweepOptions {
            mode: if params.sigma > 0.0 { SolveMode::Stochastic } else { SolveMode::Deterministic },
            det: DetSolverConfig::default(),
            stoch: StochSolverConfig::for_params(params),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatus {
    ClosedForm,
    Solved,
    Failed(String),
}

impl SweepStatus {
    pub fn label(&self) -> String {
        match self {
            SweepStatus::ClosedForm => "closed_form".into(),
            SweepStatus::Solved => "solved".into(),
            SweepStatus::Failed(m) => format!("failed: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x_star: f64,
    pub value: Option<f64>,
    pub p_at_x0: Option<f64>,
    pub status: SweepStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub x0: f64,
    pub points: Vec<SweepPoint>,
    /// Threshold with the smallest value, when that is not at either end of
    /// the successfully evaluated grid.
    pub minimizer: Option<f64>,
    pub regime: Option<RegimeTag>,
}

impl SweepResult {
    pub fn xstars(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x_star).collect()
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.value).collect()
    }
}

fn evaluate(x0: f64, params: &ModelParams, opts: &SweepOptions) -> Result<(f64, f64, SweepStatus)> {
    if opts.mode == SolveMode::Deterministic
        && params.sigma == 0.0
        && x0 >= threshold_m1(params)
        && params.theta_star() > 0.0
    {
        let c = closed_form_region(x0, params)?;
        return Ok((c.v_b, c.p_b, SweepStatus::ClosedForm));
    }
    let sol = match opts.mode {
        SolveMode::Deterministic => assemble_equilibrium(params, &opts.det)?,
        SolveMode::Stochastic => solve_stochastic(params, &opts.stoch)?,
    };
    Ok((sol.value_at(x0), sol.price_at(x0), SweepStatus::Solved))
}

fn interior_minimizer(points: &[SweepPoint]) -> Option<f64> {
    let ok: Vec<(f64, f64)> = points.iter().filter_map(|p| p.value.map(|v| (p.x_star, v))).collect();
    if ok.len() < 3 {
        return None;
    }
    let (k, _) = ok.iter().enumerate().min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())?;
    (k > 0 && k + 1 < ok.len() && ok[k].1 < ok[0].1 && ok[k].1 < ok[ok.len() - 1].1).then(|| ok[k].0)
}

/// `V(x0, x*)` for each `x*` of an ascending grid. Failed points are kept as
/// gaps; grid points are evaluated in parallel, results stay in grid order.
pub fn sweep_xstar(x0: f64, xstars: &[f64], params: &ModelParams, opts: &SweepOptions) -> Result<SweepResult> {
    params.validate()?;
    if !(x0 > 0.0) {
        return Err(Error::Validation(format!("sweep probe x0 = {x0} must be positive")));
    }
    if xstars.is_empty() || xstars.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("sweep grid must be non-empty and strictly ascending".into()));
    }
    if xstars[0] <= x0 {
        return Err(Error::Validation(format!("sweep grid must start above x0 = {x0}")));
    }
    let points: Vec<SweepPoint> = xstars
        .par_iter()
        .map(|&xs| {
            let p = params.with_x_star(xs);
            match evaluate(x0, &p, opts) {
                Ok((v, price, status)) => SweepPoint { x_star: xs, value: Some(v), p_at_x0: Some(price), status },
                Err(e) => {
                    SweepPoint { x_star: xs, value: None, p_at_x0: None, status: SweepStatus::Failed(e.to_string()) }
                }
            }
        })
        .collect();
    Ok(SweepResult { x0, minimizer: interior_minimizer(&points), regime: classify_regime(params).ok(), points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::Regime;
    use crate::model::RecoveryFunction;

    fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
    }

    fn with_alpha(alpha: f64) -> ModelParams {
        let mut m = ModelParams::benchmark(100.0, 0.0);
        m.recovery = RecoveryFunction::power_cap(5.0, alpha);
        m
    }

    #[test]
    fn alpha_half_cost_vanishes() {
        let m = with_alpha(0.5);
        let s = sweep_xstar(40.0, &geometric(41.0, 1e5, 40), &m, &SweepOptions::for_params(&m)).unwrap();
        let v: Vec<f64> = s.values().into_iter().map(Option::unwrap).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(*v.last().unwrap() < 0.05 * m.b);
        assert_eq!(s.regime.unwrap().tag, Regime::CostVanishes);
        assert_eq!(s.minimizer, None);
    }

    #[test]
    fn alpha_one_positive_floor() {
        let m = with_alpha(1.0);
        let s = sweep_xstar(40.0, &geometric(41.0, 1e6, 40), &m, &SweepOptions::for_params(&m)).unwrap();
        let v: Vec<f64> = s.values().into_iter().map(Option::unwrap).collect();
        assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        // limit as x* -> inf: p = (R0/x)(1-p)^((r-mu)/(r+lambda)), V = B(1-p)^(r/(r+lambda))
        let p = crate::analysis::implicit_price(5.0 / 40.0, 0.0, 0.12).unwrap();
        let floor = 10.0 * (1.0 - p).powf(0.2);
        assert!(v.iter().all(|&y| y >= floor - 1e-9));
        assert!((v.last().unwrap() - floor).abs() < 1e-3);
        assert_eq!(s.regime.unwrap().tag, Regime::MonotonePositive);
    }

    #[test]
    fn alpha_two_interior_minimum() {
        let m = with_alpha(2.0);
        let s = sweep_xstar(40.0, &geometric(41.0, 1e4, 60), &m, &SweepOptions::for_params(&m)).unwrap();
        let xm = s.minimizer.expect("interior minimizer");
        assert!(xm > 41.0 && xm < 1e4);
        assert_eq!(s.regime.unwrap().tag, Regime::InteriorOptimum);
    }

    #[test]
    fn failures_are_gaps() {
        // small thresholds violate the deterministic hypothesis and are recorded
        let m = ModelParams::benchmark(20.0, 0.0);
        let s = sweep_xstar(2.0, &[3.0, 20.0], &m, &SweepOptions::for_params(&m)).unwrap();
        assert!(matches!(s.points[0].status, SweepStatus::Failed(_)));
        assert_eq!(s.points[1].status, SweepStatus::Solved);
        assert!(sweep_xstar(2.0, &[20.0, 3.0], &m, &SweepOptions::for_params(&m)).is_err());
    }
}
