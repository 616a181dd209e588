//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or usage
//! error, 3 solver failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{classify_regime, stochastic_envelope, sweep_xstar, SweepOptions};
use crate::config::{parse_config, RunConfig};
use crate::det::assemble_equilibrium;
use crate::error::{Error, Result};
use crate::output::{self, Precision, Table};
use crate::sim::{mc_estimates, verify_equilibrium};
use crate::solution::{EquilibriumSolution, SolveMode};
use crate::stoch::solve_stochastic;

/// Environment variable naming the default directory for CSV artifacts.
pub const OUT_DIR_ENV: &str = "DEBTGAME_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "debtgame", version, about = "Equilibria of a debt-management game")]
struct Cli {
    /// Worker threads for simulation batches and sweep points.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long, short)]
    config: PathBuf,
    /// Output CSV. Defaults to `$DEBTGAME_OUT_DIR/<artifact>.csv`, else stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Overrides `output.precision`.
    #[arg(long, value_enum)]
    precision: Option<PrecisionArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PrecisionArg {
    Display,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Det,
    Stoch,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for the equilibrium and write x, V, p, u.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Overrides `solve.mode`.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Monte Carlo estimates of cost and bond price at one starting ratio.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Overrides `sim.x0`.
        #[arg(long)]
        x0: Option<f64>,
    },
    /// Value at a fixed ratio across bankruptcy thresholds.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Sub- and supersolution envelopes of the stochastic equilibrium.
    Envelope {
        #[command(flatten)]
        common: Common,
    },
    /// Solve, then cross-check against Monte Carlo. Exits 1 on failure.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Print the large-threshold regime and its evidence.
    Classify {
        #[command(flatten)]
        common: Common,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. }
        | Error::Infeasible { .. }
        | Error::Singularity { .. }
        | Error::StepSize { .. }
        | Error::Unclassifiable(_) => 3,
        Error::Domain(_) | Error::Hypothesis(_) | Error::Parse { .. } | Error::Validation(_) | Error::Io(_) => 2,
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(&common.config).map_err(|e| Error::Io(format!("{}: {e}", common.config.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", common.config.display()) },
        e => e,
    })?;
    if let Some(p) = common.precision {
        cfg.precision = match p {
            PrecisionArg::Display => Precision::Display,
            PrecisionArg::Full => Precision::Full,
        };
    }
    Ok(cfg)
}

fn solve(cfg: &RunConfig) -> Result<EquilibriumSolution> {
    match cfg.mode {
        SolveMode::Deterministic => assemble_equilibrium(&cfg.params, &cfg.det),
        SolveMode::Stochastic => solve_stochastic(&cfg.params, &cfg.stoch),
    }
}

fn destination(out: &Option<PathBuf>, kind: &str) -> Option<PathBuf> {
    out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()).map(|d| Path::new(&d).join(format!("{kind}.csv")))
    })
}

fn emit(table: &Table, cfg: &RunConfig, out: &Option<PathBuf>) -> Result<()> {
    let csv = table.to_csv(cfg);
    match destination(out, table.kind) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, csv).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn report_solution(sol: &EquilibriumSolution) {
    eprintln!("mode = {}, nodes = {}, residual = {:.3e}", sol.mode.as_str(), sol.len(), sol.residual);
    if let Some(x1) = sol.x1 {
        eprintln!("x1 = {x1}");
    }
    for (k, v) in &sol.diagnostics {
        eprintln!("  {k} = {v}");
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Solve { common, mode } => {
            let mut cfg = load(&common)?;
            if let Some(m) = mode {
                cfg.mode = match m {
                    ModeArg::Det => SolveMode::Deterministic,
                    ModeArg::Stoch => SolveMode::Stochastic,
                };
            }
            let sol = solve(&cfg)?;
            report_solution(&sol);
            emit(&output::solution_table(&sol), &cfg, &common.out)?;
        }
        Command::Simulate { common, x0 } => {
            let mut cfg = load(&common)?;
            if let Some(x0) = x0 {
                cfg.sim_x0 = x0;
            }
            let sol = solve(&cfg)?;
            let est = mc_estimates(cfg.sim_x0, &sol, &cfg.params, &cfg.sim, 1.0)?;
            eprintln!(
                "x0 = {}: cost {:.6} +/- {:.6} (solver {:.6}), price {:.6} +/- {:.6} (solver {:.6})",
                cfg.sim_x0,
                est.cost.mean,
                est.cost.std_error,
                sol.value_at(cfg.sim_x0),
                est.price.mean,
                est.price.std_error,
                sol.price_at(cfg.sim_x0)
            );
            emit(&output::estimate_table(cfg.sim_x0, &est), &cfg, &common.out)?;
        }
        Command::Sweep { common } => {
            let cfg = load(&common)?;
            let opts = SweepOptions { mode: cfg.mode, det: cfg.det, stoch: cfg.stoch.clone() };
            let res = sweep_xstar(cfg.sweep.x0, &cfg.sweep.grid(), &cfg.params, &opts)?;
            let failed = res.points.iter().filter(|p| p.value.is_none()).count();
            eprintln!("{} of {} thresholds failed", failed, res.points.len());
            match res.minimizer {
                Some(x) => eprintln!("interior minimizer at x_star = {x}"),
                None => eprintln!("no interior minimizer on this grid"),
            }
            emit(&output::sweep_table(&res), &cfg, &common.out)?;
            if failed == res.points.len() {
                return Ok(3);
            }
        }
        Command::Envelope { common } => {
            let cfg = load(&common)?;
            let n = cfg.stoch.n_grid;
            let x_star = cfg.params.x_star;
            let grid: Vec<f64> =
                (0..n).map(|i| if i + 1 == n { x_star } else { x_star * i as f64 / (n - 1) as f64 }).collect();
            let env = stochastic_envelope(&cfg.params, &grid)?;
            eprintln!("x2 = {}, M1 = {}", env.x2, env.m1);
            emit(&output::envelope_table(&env), &cfg, &common.out)?;
        }
        Command::Verify { common } => {
            let cfg = load(&common)?;
            let sol = solve(&cfg)?;
            report_solution(&sol);
            let rep = verify_equilibrium(&sol, &cfg.params, &cfg.sim, &cfg.verify.probes, &cfg.verify.tol)?;
            for p in &rep.probes {
                eprintln!(
                    "x0 = {}: price gap {:.2e} (tol {:.2e}), cost gap {:.2e} (tol {:.2e}), perturbations {}",
                    p.x0,
                    p.price_gap,
                    p.price_tol,
                    p.cost_gap,
                    p.cost_tol,
                    if p.perturbations.iter().all(|c| c.passed) { "ok" } else { "FAILED" }
                );
            }
            emit(&output::verify_table(&rep), &cfg, &common.out)?;
            eprintln!("{}", if rep.passed { "verification passed" } else { "verification FAILED" });
            return Ok(if rep.passed { 0 } else { 1 });
        }
        Command::Classify { common } => {
            let cfg = load(&common)?;
            let t = classify_regime(&cfg.params)?;
            let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
            println!("{}", t.tag.as_str());
            println!("tail_product = {}", t.basis.tail_product.map_or("infinite".to_string(), |x| x.to_string()));
            println!("log_slope_nonneg = {}", t.basis.log_slope_nonneg);
            println!("delta = {}", opt(t.basis.delta));
            println!("sample_from = {}", t.basis.sample_from);
        }
    }
    Ok(0)
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
