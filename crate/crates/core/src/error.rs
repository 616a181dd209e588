use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// `rV > H_max(x, p)`: the implicit equation `rV = H(x, V', p)` has no root.
    #[error("infeasible: rV = {rv} exceeds H_max = {h_max} at x = {x}, p = {p}")]
    Infeasible { x: f64, p: f64, rv: f64, h_max: f64 },

    /// The price slope `G-` has a vanishing denominator.
    #[error("singular price slope at x = {x}, V = {v}, p = {p} (H_xi = {h_xi})")]
    Singularity { x: f64, v: f64, p: f64, h_xi: f64 },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("no convergence after {steps} steps (last update {last_update:.3e}, eps = {eps:.3e})")]
    NoConvergence { steps: usize, last_update: f64, eps: f64 },

    #[error("explicit step size {dt:.3e} exceeds the stability bound; try dt <= {suggested:.3e}")]
    StepSize { dt: f64, suggested: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("cannot classify regime: {0}")]
    Unclassifiable(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
