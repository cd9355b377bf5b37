//! Variational Bayesian estimator with a burst-sparse angular prior.

mod free_energy;
mod hyper;
mod solver;
mod state;

pub use free_energy::free_energy;
pub use hyper::{HyperParams, PriorMode, RefineSchedule, DEFAULT_REFERENCE_POWER};
pub use solver::{run_solver, run_solver_from, run_solver_observed, Observer, SweepView};
pub use state::{HybridPrior, IidPrior, PosteriorState, PriorState};
