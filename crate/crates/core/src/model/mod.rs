//! Model constants, cost and recovery families, and the pointwise Hamiltonian.

mod cost;
mod hamiltonian;
mod params;
mod recovery;

pub use cost::{CostEval, CostFunction};
pub use hamiltonian::{BranchRoots, Extended, HamiltonianEval, SigmaMode, StationaryPoint};
pub use params::ModelParams;
pub use recovery::{RecoveryEval, RecoveryFunction, TailProduct};
