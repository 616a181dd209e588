//! Feedback Nash equilibria of a debt-management game between a borrower
//! and a pool of risk-neutral lenders.
//!
//! The borrower controls the fraction `u` of income spent on debt service and
//! declares bankruptcy when the debt-to-income ratio reaches `x*`. Lenders
//! price bonds so that they break even in expectation. An equilibrium is a
//! value function `V`, a bond price `p` and a feedback control `u*` on
//! `[0, x*]` that are mutually consistent.
//!
//! * [`model`]: constants, cost and recovery families, the Hamiltonian.
//! * [`det`]: the deterministic (`sigma = 0`) equilibrium by backward integration.
//! * [`stoch`]: the stochastic equilibrium by pseudo-time relaxation.
//! * [`sim`]: Monte Carlo cross-checks of an equilibrium.
//! * [`analysis`]: closed forms, envelopes, threshold sweeps and regimes.
//! * [`config`], [`output`], [`cli`]: the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod analysis;
pub mod cli;
pub mod config;
pub mod det;
pub mod error;
pub mod model;
pub mod output;
pub mod roots;
pub mod sim;
pub mod solution;
pub mod stoch;

pub use error::{Error, Result};
pub use model::{CostFunction, ModelParams, RecoveryFunction, SigmaMode};
pub use solution::{EquilibriumSolution, SolveMode};
