//! Result rows and their CSV / JSON emission.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Method, ScenarioConfig};
use crate::error::HarnessError;

/// Metric carried by a [`ResultRow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Nmse,
    RuntimeS,
    Iterations,
    SupportEnergyFraction,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Nmse => "nmse",
            Metric::RuntimeS => "runtime_s",
            Metric::Iterations => "iterations",
            Metric::SupportEnergyFraction => "support_energy_fraction",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub method: Method,
    pub sweep_value: f64,
    pub metric: Metric,
    pub value: f64,
    /// Trials the value is averaged over.
    pub trials: usize,
    /// Trial seed for single-trial rows, base seed for averages.
    pub seed: u64,
    pub metadata: BTreeMap<String, String>,
}

impl ResultRow {
    fn sort_key(&self) -> (&str, f64, Method, Metric, u64) {
        (&self.scenario, self.sweep_value, self.method, self.metric, self.seed)
    }
}

/// Orders rows by scenario, sweep value, method, metric and seed.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        let (ka, kb) = (a.sort_key(), b.sort_key());
        ka.0.cmp(kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.cmp(&kb.2))
            .then(ka.3.cmp(&kb.3))
            .then(ka.4.cmp(&kb.4))
    });
}

/// Output format of [`emit_results`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(HarnessError::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// Header of the CSV output.
pub const CSV_HEADER: [&str; 7] = ["scenario", "method", "sweep_value", "metric", "value", "trials", "seed"];

/// Renders rows as CSV text.
pub fn to_csv(rows: &[ResultRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.method.name().to_string(),
            r.sweep_value.to_string(),
            r.metric.name().to_string(),
            r.value.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct JsonSummary<'a> {
    scenario: &'a ScenarioConfig,
    rows: &'a [ResultRow],
}

/// Renders the scenario and rows, with metadata, as pretty JSON.
pub fn to_json(rows: &[ResultRow], scenario: &ScenarioConfig) -> Result<String, HarnessError> {
    serde_json::to_string_pretty(&JsonSummary { scenario, rows }).map_err(|e| HarnessError::Io(e.to_string()))
}

/// Writes `rows` to `path`. Refuses an empty table without touching the file system.
pub fn emit_results(
    rows: &[ResultRow],
    scenario: &ScenarioConfig,
    path: &Path,
    format: Format,
) -> Result<(), HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyTable);
    }
    if rows.iter().any(|r| !r.value.is_finite()) {
        return Err(HarnessError::Estimation("non-finite value in result table".into()));
    }
    let text = match format {
        Format::Csv => to_csv(rows)?,
        Format::Json => to_json(rows, scenario)?,
    };
    fs::write(path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}
