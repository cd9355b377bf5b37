//! Per-iteration NMSE traces.

use rayon::prelude::*;

use crate::config::{Method, ScenarioConfig};
use crate::error::HarnessError;
use crate::results::{sort_rows, Metric, ResultRow};
use crate::trial::{prepare_trial, provenance, run_method};

/// Relative band around the final NMSE that counts as settled.
pub const SETTLE_BAND: f64 = 0.05;

/// NMSE after every iteration of one method on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub method: Method,
    pub sweep_value: f64,
    pub seed: u64,
    pub nmse: Vec<f64>,
}

impl ConvergenceTrace {
    pub fn final_nmse(&self) -> f64 {
        self.nmse.last().copied().unwrap_or(f64::NAN)
    }

    /// First iteration (1-based) from which the trace stays within `band`
    /// (relative) of its final value.
    pub fn settled_at(&self, band: f64) -> usize {
        let last = self.final_nmse();
        let tol = band * last.abs();
        let mut k = self.nmse.len();
        while k > 0 && (self.nmse[k - 1] - last).abs() <= tol {
            k -= 1;
        }
        k + 1
    }
}

/// Runs every method on trial 0 of each sweep value and records NMSE per
/// iteration. Early stopping follows the scenario's tolerance.
pub fn convergence_report(scenario: &ScenarioConfig) -> Result<Vec<ConvergenceTrace>, HarnessError> {
    scenario.validate()?;
    let jobs: Vec<(f64, Method)> =
        scenario.sweep.values.iter().flat_map(|&v| scenario.methods.iter().map(move |&m| (v, m))).collect();
    let mut traces: Vec<ConvergenceTrace> = jobs
        .par_iter()
        .map(|&(v, method)| {
            let data = prepare_trial(scenario, v, 0)?;
            let mut nmse = Vec::new();
            run_method(method, &data, scenario, &scenario.solver_at(v), Some(&mut nmse))?;
            Ok(ConvergenceTrace { method, sweep_value: v, seed: data.seed, nmse })
        })
        .collect::<Result<_, HarnessError>>()?;
    traces.sort_by(|a, b| a.sweep_value.total_cmp(&b.sweep_value).then(a.method.cmp(&b.method)));
    Ok(traces)
}

/// One `nmse` row per iteration; the sweep value column holds the iteration
/// number and the metadata the SNR and settling iteration.
pub fn convergence_rows(scenario: &ScenarioConfig, traces: &[ConvergenceTrace]) -> Result<Vec<ResultRow>, HarnessError> {
    let mut rows = Vec::new();
    for t in traces {
        let data = prepare_trial(scenario, t.sweep_value, 0)?;
        let mut meta = provenance(t.method, scenario, &data);
        meta.insert("settled_at".into(), t.settled_at(SETTLE_BAND).to_string());
        for (i, &v) in t.nmse.iter().enumerate() {
            rows.push(ResultRow {
                scenario: format!("{}@{}dB", scenario.id, t.sweep_value),
                method: t.method,
                sweep_value: (i + 1) as f64,
                metric: Metric::Nmse,
                value: v,
                trials: 1,
                seed: t.seed,
                metadata: meta.clone(),
            });
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}
