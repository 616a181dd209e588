//! CSV artifacts. Each file starts with a `#` block holding the artifact
//! kind, the crate version and every resolved configuration value.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{EnvelopeSet, SweepResult};
use crate::config::{render, RunConfig};
use crate::sim::{MCPair, VerificationReport};
use crate::solution::EquilibriumSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// Six decimal places.
    Display,
    /// Seventeen significant digits, enough to round-trip any `f64`.
    Full,
}

impl Precision {
    pub fn parse(s: &str) -> Option<Precision> {
        match s {
            "display" => Some(Precision::Display),
            "full" => Some(Precision::Full),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Precision::Display => "display",
            Precision::Full => "full",
        }
    }

    pub fn fmt(&self, v: f64) -> String {
        let s = match self {
            Precision::Display => format!("{v:.6}"),
            Precision::Full => format!("{v:.16e}"),
        };
        // no negative zero in artifacts
        match s.strip_prefix('-') {
            Some(rest) if v.abs() < 1.0 && rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
            _ => s,
        }
    }
}

pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Flag(bool),
}

pub struct Table {
    pub kind: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv(&self, cfg: &RunConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# artifact = {}", self.kind);
        let _ = writeln!(out, "# version = debtgame {}", env!("CARGO_PKG_VERSION"));
        for line in render(cfg).lines() {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => cfg.precision.fmt(*v),
                    Cell::Int(n) => n.to_string(),
                    Cell::Text(s) => quote(s),
                    Cell::Flag(b) => if *b { "pass" } else { "fail" }.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn solution_table(sol: &EquilibriumSolution) -> Table {
    let rows = (0..sol.len())
        .map(|i| vec![Cell::Num(sol.xs[i]), Cell::Num(sol.v[i]), Cell::Num(sol.p[i]), Cell::Num(sol.u[i])])
        .collect();
    Table { kind: "solution", columns: vec!["x", "V", "p", "u"], rows }
}

pub fn sweep_table(s: &SweepResult) -> Table {
    let opt = |v: Option<f64>| v.map_or(Cell::Text(String::new()), Cell::Num);
    let rows = s
        .points
        .iter()
        .map(|p| vec![Cell::Num(p.x_star), opt(p.value), opt(p.p_at_x0), Cell::Text(p.status.label())])
        .collect();
    Table { kind: "sweep", columns: vec!["x_star", "V", "p_at_x0", "status"], rows }
}

pub fn envelope_table(e: &EnvelopeSet) -> Table {
    let rows = (0..e.xs.len())
        .map(|i| {
            vec![Cell::Num(e.xs[i]), Cell::Num(e.p1[i]), Cell::Num(e.v1[i]), Cell::Num(e.p2[i]), Cell::Num(e.v2[i])]
        })
        .collect();
    Table { kind: "envelope", columns: vec!["x", "p1", "V1", "p2", "V2"], rows }
}

pub fn estimate_table(x0: f64, est: &MCPair) -> Table {
    let row = |name: &str, e: &crate::sim::MCEstimate, bias: f64| {
        vec![
            Cell::Num(x0),
            Cell::Text(name.into()),
            Cell::Num(e.mean),
            Cell::Num(e.std_error),
            Cell::Int(e.n),
            Cell::Num(e.censored_fraction),
            Cell::Num(bias),
        ]
    };
    Table {
        kind: "estimate",
        columns: vec!["x0", "quantity", "mean", "std_error", "n", "censored_fraction", "bias_bound"],
        rows: vec![row("cost", &est.cost, est.cost_bias_bound), row("price", &est.price, est.price_bias_bound)],
    }
}

pub fn verify_table(rep: &VerificationReport) -> Table {
    let mut rows = Vec::new();
    for p in &rep.probes {
        rows.push(vec![
            Cell::Num(p.x0),
            Cell::Text("price".into()),
            Cell::Num(1.0),
            Cell::Num(p.p_solver),
            Cell::Num(p.estimate.price.mean),
            Cell::Num(p.estimate.price.std_error),
            Cell::Num(p.price_gap),
            Cell::Num(p.price_tol),
            Cell::Flag(p.price_ok),
        ]);
        rows.push(vec![
            Cell::Num(p.x0),
            Cell::Text("cost".into()),
            Cell::Num(1.0),
            Cell::Num(p.v_solver),
            Cell::Num(p.estimate.cost.mean),
            Cell::Num(p.estimate.cost.std_error),
            Cell::Num(p.cost_gap),
            Cell::Num(p.cost_tol),
            Cell::Flag(p.cost_ok),
        ]);
        for c in &p.perturbations {
            // reference is the unperturbed mean; tolerance is 2 SE below it
            rows.push(vec![
                Cell::Num(p.x0),
                Cell::Text("perturbed_cost".into()),
                Cell::Num(c.scale),
                Cell::Num(p.estimate.cost.mean),
                Cell::Num(c.cost.mean),
                Cell::Num(c.cost.std_error),
                Cell::Num(c.cost.mean - p.estimate.cost.mean),
                Cell::Num(2.0 * p.estimate.cost.std_error),
                Cell::Flag(c.passed),
            ]);
        }
    }
    Table {
        kind: "verify",
        columns: vec![
            "x0",
            "check",
            "control_scale",
            "reference",
            "mc_mean",
            "mc_std_error",
            "gap",
            "tolerance",
            "result",
        ],
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(Precision::Display.fmt(0.25), "0.250000");
        assert_eq!(Precision::Display.fmt(-0.0), "0.000000");
        assert_eq!(Precision::Display.fmt(-1e-9), "0.000000");
        assert_eq!(Precision::Display.fmt(-1e-6), "-0.000001");
        let v = 0.1 + 0.2;
        let s = Precision::Full.fmt(v);
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(s, "3.0000000000000004e-1");
    }

    #[test]
    fn quoting() {
        assert_eq!(quote("solved"), "solved");
        assert_eq!(quote("failed: a, b"), "\"failed: a, b\"");
    }
}
