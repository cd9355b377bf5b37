use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::config::{Method, ScenarioConfig};
use crate::error::HarnessError;
use crate::results::{sort_rows, Metric, ResultRow};
use crate::trial::{run_trial, MethodFailure, TrialOutcome};

/// Trial-averaged rows plus the per-trial rows they came from.
#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    /// Mean NMSE and mean iteration count per (method, sweep value).
    pub rows: Vec<ResultRow>,
    pub per_trial: Vec<ResultRow>,
    pub failures: Vec<MethodFailure>,
}

impl SweepReport {
    /// Averaged value of `metric` for `method` at `sweep_value`.
    pub fn value(&self, method: Method, sweep_value: f64, metric: Metric) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.sweep_value == sweep_value && r.metric == metric)
            .map(|r| r.value)
    }
}

/// Runs every (sweep value, trial) pair, concurrently across pairs, and
/// averages per method and sweep value. Rows are sorted, so the result does
/// not depend on scheduling.
pub fn run_sweep(scenario: &ScenarioConfig) -> Result<SweepReport, HarnessError> {
    scenario.validate()?;
    let jobs: Vec<(f64, usize)> =
        scenario.sweep.values.iter().flat_map(|&v| (0..scenario.trials).map(move |t| (v, t))).collect();
    let outcomes: Vec<TrialOutcome> =
        jobs.par_iter().map(|&(v, t)| run_trial(scenario, v, t)).collect::<Result<_, _>>()?;
    let mut report = SweepReport::default();
    for o in outcomes {
        report.per_trial.extend(o.rows);
        report.failures.extend(o.failures);
    }
    sort_rows(&mut report.per_trial);
    report.failures.sort_by(|a, b| a.sweep_value.total_cmp(&b.sweep_value).then(a.method.cmp(&b.method)));

    let mut groups: BTreeMap<(u64, Method, Metric), Vec<&ResultRow>> = BTreeMap::new();
    for r in &report.per_trial {
        groups.entry((r.sweep_value.to_bits(), r.method, r.metric)).or_default().push(r);
    }
    for ((bits, method, metric), rows) in groups {
        let mean = rows.iter().map(|r| r.value).sum::<f64>() / rows.len() as f64;
        let mut metadata = rows[0].metadata.clone();
        for key in ["trace_len", "converged", "safeguard_events", "refinement_passes"] {
            metadata.remove(key);
        }
        let converged = rows.iter().filter(|r| r.metadata.get("converged").map(String::as_str) == Some("true")).count();
        metadata.insert("converged_trials".into(), converged.to_string());
        report.rows.push(ResultRow {
            scenario: scenario.id.clone(),
            method,
            sweep_value: f64::from_bits(bits),
            metric,
            value: mean,
            trials: rows.len(),
            seed: scenario.base_seed,
            metadata,
        });
    }
    sort_rows(&mut report.rows);
    Ok(report)
}
