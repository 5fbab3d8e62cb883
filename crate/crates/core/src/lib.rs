//! Decentralized derivative-free optimization over a simulated agent network.
//!
//! Every agent `i` owns a private smooth objective `f_i` and a local copy
//! `x_i` of the decision variable; the goal is to minimize `sum_i f_i(x)`
//! while only exchanging copies with graph neighbors through a symmetric,
//! doubly stochastic mixing matrix.
//!
//! The crate provides:
//!
//! * [`network`]: random connected graphs, Metropolis mixing matrices and
//!   their spectral report, blockwise mixing and averaging operators.
//! * [`problems`]: the separable logistic/log toy problem and a registry of
//!   classical nonlinear least-squares vector functions split into one
//!   squared residual per agent.
//! * [`penalty`]: quadratic consensus penalty and per-agent Lyapunov pieces.
//! * [`searchcore`]: positive spanning sets, forcing functions, sufficient
//!   decrease polling and stepsize schedules.
//! * [`solvers`]: the two decentralized direct-search drivers (Lyapunov
//!   decrease and local function decrease) and two zeroth-order
//!   decentralized gradient baselines.
//! * [`bench`]: optimality metrics, convergence indices, performance and
//!   data profiles.
//! * [`scenarios`]: small hand-built instances with known behavior.
//! * [`experiment`]: configuration files and batch orchestration used by
//!   the `ddsopt` binary.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod bench;
pub mod error;
pub mod experiment;
pub mod network;
pub mod penalty;
pub mod problems;
pub mod scenarios;
pub mod searchcore;
pub mod solvers;
pub mod stacked;

pub use error::{Error, Result};
pub use network::{Graph, MixingMatrix, SpectralReport};
pub use problems::DecentralizedProblem;
pub use stacked::Stacked;

/// Formats a float with 17 significant digits, the precision used by every
/// CSV file written by this crate.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}
