use crate::config::{Method, ScenarioConfig};
use crate::error::HarnessError;
use crate::results::{sort_rows, Metric, ResultRow};
use crate::trial::{prepare_trial, provenance, run_method};

/// Wall-clock cost of one method at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeSample {
    pub method: Method,
    pub sweep_value: f64,
    /// Median over the timed repeats.
    pub median_s: f64,
    pub iterations: usize,
    pub repeats: Vec<f64>,
}

impl RuntimeSample {
    /// Median time divided by the iteration count.
    pub fn per_iteration_s(&self) -> f64 {
        self.median_s / self.iterations.max(1) as f64
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times every method on trial 0 of each sweep value: one untimed warm-up,
/// then the median of `repeats` runs. Early stopping is disabled so every
/// iterative method runs to its cap. Runs are sequential.
pub fn measure_runtime_samples(scenario: &ScenarioConfig, repeats: usize) -> Result<Vec<RuntimeSample>, HarnessError> {
    scenario.validate()?;
    if repeats < 3 {
        return Err(HarnessError::Config("runtime needs at least 3 repeats".into()));
    }
    let mut out = Vec::new();
    for &v in &scenario.sweep.values {
        let data = prepare_trial(scenario, v, 0)?;
        let mut solver = scenario.solver_at(v);
        solver.tol = f64::MIN_POSITIVE;
        for &method in &scenario.methods {
            let warm = run_method(method, &data, scenario, &solver, None)?;
            let mut times = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                times.push(run_method(method, &data, scenario, &solver, None)?.runtime_s);
            }
            out.push(RuntimeSample {
                method,
                sweep_value: v,
                median_s: median(&times),
                iterations: warm.result.iters,
                repeats: times,
            });
        }
    }
    Ok(out)
}

/// [`measure_runtime_samples`] as result rows (`runtime_s` and `iterations`).
pub fn measure_runtime(scenario: &ScenarioConfig, repeats: usize) -> Result<Vec<ResultRow>, HarnessError> {
    let samples = measure_runtime_samples(scenario, repeats)?;
    let mut rows = Vec::new();
    for s in samples {
        let data = prepare_trial(scenario, s.sweep_value, 0)?;
        let mut meta = provenance(s.method, scenario, &data);
        meta.insert("repeats".into(), s.repeats.len().to_string());
        meta.insert("per_iteration_s".into(), s.per_iteration_s().to_string());
        for (metric, value) in [(Metric::RuntimeS, s.median_s), (Metric::Iterations, s.iterations as f64)] {
            rows.push(ResultRow {
                scenario: scenario.id.clone(),
                method: s.method,
                sweep_value: s.sweep_value,
                metric,
                value,
                trials: 1,
                seed: data.seed,
                metadata: meta.clone(),
            });
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::median;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
