//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment. Model keys are required; every
//! solver, simulation and output key has a default. Unknown and repeated keys
//! are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::det::DetSolverConfig;
use crate::error::{Error, Result};
use crate::model::{CostFunction, ModelParams, RecoveryFunction};
use crate::output::Precision;
use crate::sim::{SimConfig, VerifyTolerances};
use crate::solution::SolveMode;
use crate::stoch::StochSolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub probes: Vec<f64>,
    pub tol: VerifyTolerances,
}

/// Grid of thresholds for the sweep command, geometric between the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub x0: f64,
    pub x_star_min: f64,
    pub x_star_max: f64,
    pub n: usize,
}

impl SweepConfig {
    pub fn grid(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.x_star_min];
        }
        let ratio = self.x_star_max / self.x_star_min;
        (0..self.n)
            .map(|i| match i {
                0 => self.x_star_min,
                i if i + 1 == self.n => self.x_star_max,
                i => self.x_star_min * ratio.powf(i as f64 / (self.n - 1) as f64),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub mode: SolveMode,
    pub det: DetSolverConfig,
    pub stoch: StochSolverConfig,
    pub sim: SimConfig,
    /// Starting ratio for the `simulate` command.
    pub sim_x0: f64,
    pub verify: VerifyConfig,
    pub sweep: SweepConfig,
    pub precision: Precision,
}

struct Doc {
    entries: BTreeMap<String, (usize, String)>,
}

impl Doc {
    fn parse(text: &str) -> Result<Doc> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, msg: format!("expected `key = value`, got `{body}`") })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::Parse { line, msg: format!("malformed key `{k}`") });
            }
            if v.is_empty() {
                return Err(Error::Parse { line, msg: format!("missing value for `{k}`") });
            }
            if let Some((first, _)) = entries.insert(k.to_string(), (line, v.to_string())) {
                return Err(Error::Parse { line, msg: format!("`{k}` repeats line {first}") });
            }
        }
        Ok(Doc { entries })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|(line, v)| {
                v.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("`{key}`: `{v}` is not a number") })
            })
            .transpose()
    }

    fn f64_req(&mut self, key: &str) -> Result<f64> {
        self.f64_opt(key)?.ok_or_else(|| Error::Validation(format!("missing required key `{key}`")))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    /// Accepts `100000` as well as `1e5`.
    fn uint_or<T: TryFrom<u64>>(&mut self, key: &str, default: T) -> Result<T> {
        let Some((line, v)) = self.take(key) else { return Ok(default) };
        let bad = || Error::Parse { line, msg: format!("`{key}`: `{v}` is not a non-negative integer") };
        let n = match v.parse::<u64>() {
            Ok(n) => n,
            Err(_) => {
                let f = v.parse::<f64>().map_err(|_| bad())?;
                if !(f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64) {
                    return Err(bad());
                }
                f as u64
            }
        };
        T::try_from(n).map_err(|_| bad())
    }

    fn list_or(&mut self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        let Some((line, v)) = self.take(key) else { return Ok(default) };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse { line, msg: format!("`{key}`: `{}` is not a number", s.trim()) })
            })
            .collect()
    }

    fn str_or(&mut self, key: &str, default: &str) -> (Option<usize>, String) {
        match self.take(key) {
            Some((line, v)) => (Some(line), v),
            None => (None, default.to_string()),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().min_by_key(|(_, (line, _))| *line) {
            Some((k, (line, _))) => Err(Error::Parse { line, msg: format!("unknown key `{k}`") }),
            None => Ok(()),
        }
    }
}

fn bad_choice(line: Option<usize>, key: &str, v: &str, allowed: &str) -> Error {
    let msg = format!("`{key}`: unknown value `{v}` (expected {allowed})");
    match line {
        Some(line) => Error::Parse { line, msg },
        None => Error::Validation(msg),
    }
}

fn parse_cost(doc: &mut Doc) -> Result<CostFunction> {
    let (line, kind) = doc.str_or("cost.kind", "log_barrier");
    let c = doc.f64_or("cost.c", 1.0)?;
    match kind.as_str() {
        "log_barrier" => Ok(CostFunction::LogBarrier { c }),
        "power_barrier" => Ok(CostFunction::PowerBarrier { c, alpha: doc.f64_req("cost.alpha")? }),
        _ => Err(bad_choice(line, "cost.kind", &kind, "log_barrier or power_barrier")),
    }
}

fn parse_recovery(doc: &mut Doc) -> Result<RecoveryFunction> {
    let (line, kind) = doc.str_or("recovery.kind", "power_cap");
    match kind.as_str() {
        "power_cap" => {
            Ok(RecoveryFunction::PowerCap { r0: doc.f64_req("recovery.R0")?, alpha: doc.f64_req("recovery.alpha")? })
        }
        "linear_support" => Ok(RecoveryFunction::LinearSupport { m2_support: doc.f64_req("recovery.M2_support")? }),
        "constant" => Ok(RecoveryFunction::Constant { value: doc.f64_req("recovery.value")? }),
        _ => Err(bad_choice(line, "recovery.kind", &kind, "power_cap, linear_support or constant")),
    }
}

pub fn parse_mode(s: &str) -> Option<SolveMode> {
    match s {
        "det" => Some(SolveMode::Deterministic),
        "stoch" => Some(SolveMode::Stochastic),
        _ => None,
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut doc = Doc::parse(text)?;
    let params = ModelParams {
        r: doc.f64_req("r")?,
        lambda: doc.f64_req("lambda")?,
        mu: doc.f64_req("mu")?,
        sigma: doc.f64_req("sigma")?,
        b: doc.f64_req("B")?,
        x_star: doc.f64_req("x_star")?,
        cost: parse_cost(&mut doc)?,
        recovery: parse_recovery(&mut doc)?,
    };
    params.validate()?;
    let xs = params.x_star;

    let default_mode = if params.sigma > 0.0 { "stoch" } else { "det" };
    let (line, m) = doc.str_or("solve.mode", default_mode);
    let mode = parse_mode(&m).ok_or_else(|| bad_choice(line, "solve.mode", &m, "det or stoch"))?;

    let d = DetSolverConfig::default();
    let det = DetSolverConfig {
        n_grid: doc.uint_or("det.n_grid", d.n_grid)?,
        rk_tol: doc.f64_or("det.rk_tol", d.rk_tol)?,
        x_min_frac: doc.f64_or("det.x_min_frac", d.x_min_frac)?,
        crossing_tol: doc.f64_or("det.crossing_tol", d.crossing_tol)?,
    };
    det.validate()?;

    let s = StochSolverConfig::for_params(&params);
    let stoch = StochSolverConfig {
        n_grid: doc.uint_or("stoch.n_grid", s.n_grid)?,
        dt: doc.f64_or("stoch.dt", s.dt)?,
        eps_schedule: doc.list_or("stoch.eps_schedule", s.eps_schedule)?,
        steady_tol: doc.f64_or("stoch.steady_tol", s.steady_tol)?,
        max_steps: doc.uint_or("stoch.max_steps", s.max_steps)?,
    };
    stoch.validate()?;

    let c = SimConfig::default();
    let sim = SimConfig {
        dt: doc.f64_or("sim.dt", c.dt)?,
        t_max: doc.f64_or("sim.t_max", c.t_max)?,
        n_paths: doc.uint_or("sim.n_paths", c.n_paths)?,
        seed: doc.uint_or("sim.seed", c.seed)?,
        batch: doc.uint_or("sim.batch", c.batch)?,
    };
    sim.validate()?;
    let sim_x0 = doc.f64_or("sim.x0", 0.5 * xs)?;
    if !(0.0..=xs).contains(&sim_x0) {
        return Err(Error::Validation(format!("sim.x0 must lie in [0, x_star], got {sim_x0}")));
    }

    let t = VerifyTolerances::default();
    let probes = doc.list_or("verify.probes", vec![0.25 * xs, 0.5 * xs, 0.75 * xs])?;
    if probes.iter().any(|p| !(0.0..=xs).contains(p)) {
        return Err(Error::Validation("verify.probes must lie in [0, x_star]".into()));
    }
    let tol = VerifyTolerances {
        price_allowance: doc.f64_or("verify.price_allowance", t.price_allowance)?,
        cost_allowance_frac: doc.f64_or("verify.cost_allowance", t.cost_allowance_frac)?,
        perturbation_scales: t.perturbation_scales,
    };
    if !(tol.price_allowance >= 0.0 && tol.cost_allowance_frac >= 0.0) {
        return Err(Error::Validation("verify allowances must be non-negative".into()));
    }

    let sx0 = doc.f64_or("sweep.x0", 0.4 * xs)?;
    let sweep = SweepConfig {
        x0: sx0,
        x_star_min: doc.f64_or("sweep.x_star_min", 1.025 * sx0)?,
        x_star_max: doc.f64_or("sweep.x_star_max", 100.0 * xs)?,
        n: doc.uint_or("sweep.n", 40)?,
    };
    if !(sweep.x0 > 0.0 && sweep.x_star_min > sweep.x0 && sweep.x_star_max > sweep.x_star_min && sweep.n >= 1) {
        return Err(Error::Validation(
            "sweep needs 0 < sweep.x0 < sweep.x_star_min < sweep.x_star_max and sweep.n >= 1".into(),
        ));
    }

    let (line, p) = doc.str_or("output.precision", "display");
    let precision = Precision::parse(&p).ok_or_else(|| bad_choice(line, "output.precision", &p, "display or full"))?;

    doc.finish()?;
    Ok(RunConfig { params, mode, det, stoch, sim, sim_x0, verify: VerifyConfig { probes, tol }, sweep, precision })
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

/// Every resolved key, one per line, in a form `parse_config` reads back to
/// an identical configuration.
pub fn render(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("r", p.r.to_string());
    kv("lambda", p.lambda.to_string());
    kv("mu", p.mu.to_string());
    kv("sigma", p.sigma.to_string());
    kv("B", p.b.to_string());
    kv("x_star", p.x_star.to_string());
    kv("cost.kind", p.cost.kind_name().into());
    match p.cost {
        CostFunction::LogBarrier { c } => kv("cost.c", c.to_string()),
        CostFunction::PowerBarrier { c, alpha } => {
            kv("cost.c", c.to_string());
            kv("cost.alpha", alpha.to_string());
        }
    }
    kv("recovery.kind", p.recovery.kind_name().into());
    match p.recovery {
        RecoveryFunction::PowerCap { r0, alpha } => {
            kv("recovery.R0", r0.to_string());
            kv("recovery.alpha", alpha.to_string());
        }
        RecoveryFunction::LinearSupport { m2_support } => kv("recovery.M2_support", m2_support.to_string()),
        RecoveryFunction::Constant { value } => kv("recovery.value", value.to_string()),
    }
    kv("solve.mode", cfg.mode.as_str().into());
    kv("det.n_grid", cfg.det.n_grid.to_string());
    kv("det.rk_tol", cfg.det.rk_tol.to_string());
    kv("det.x_min_frac", cfg.det.x_min_frac.to_string());
    kv("det.crossing_tol", cfg.det.crossing_tol.to_string());
    kv("stoch.n_grid", cfg.stoch.n_grid.to_string());
    kv("stoch.dt", cfg.stoch.dt.to_string());
    kv("stoch.eps_schedule", join(&cfg.stoch.eps_schedule));
    kv("stoch.steady_tol", cfg.stoch.steady_tol.to_string());
    kv("stoch.max_steps", cfg.stoch.max_steps.to_string());
    kv("sim.dt", cfg.sim.dt.to_string());
    kv("sim.t_max", cfg.sim.t_max.to_string());
    kv("sim.n_paths", cfg.sim.n_paths.to_string());
    kv("sim.seed", cfg.sim.seed.to_string());
    kv("sim.batch", cfg.sim.batch.to_string());
    kv("sim.x0", cfg.sim_x0.to_string());
    kv("verify.probes", join(&cfg.verify.probes));
    kv("verify.price_allowance", cfg.verify.tol.price_allowance.to_string());
    kv("verify.cost_allowance", cfg.verify.tol.cost_allowance_frac.to_string());
    kv("sweep.x0", cfg.sweep.x0.to_string());
    kv("sweep.x_star_min", cfg.sweep.x_star_min.to_string());
    kv("sweep.x_star_max", cfg.sweep.x_star_max.to_string());
    kv("sweep.n", cfg.sweep.n.to_string());
    kv("output.precision", cfg.precision.as_str().into());
    out
}
