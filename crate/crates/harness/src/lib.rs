//! Seeded Monte Carlo experiments for the MIMO-OTFS channel estimators:
//! NMSE sweeps, runtime scaling, convergence traces and angular support
//! recovery, with CSV/JSON output.

pub mod config;
pub mod convergence;
pub mod error;
pub mod results;
pub mod runtime;
pub mod support;
pub mod sweep;
pub mod trial;

pub use config::{ChannelSection, Method, ScenarioConfig, SolverSection, SweepAxis, SweepSection, SystemSection};
pub use convergence::{convergence_report, convergence_rows, ConvergenceTrace, SETTLE_BAND};
pub use error::HarnessError;
pub use results::{emit_results, sort_rows, Format, Metric, ResultRow};
pub use runtime::{measure_runtime, measure_runtime_samples, RuntimeSample};
pub use support::{support_energy_fraction, support_recovery_report, AngularProfile, SupportReport};
pub use sweep::{run_sweep, SweepReport};
pub use trial::{prepare_trial, run_method, run_trial, MethodFailure, MethodRun, TrialData, TrialOutcome};
