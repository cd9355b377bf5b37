//! Angular support recovery on fixed path lists.

use crate::config::{Method, ScenarioConfig};
use crate::error::HarnessError;
use crate::results::{sort_rows, Metric, ResultRow};
use crate::trial::{prepare_trial, provenance, run_method};

/// Window around each true angle that counts as recovered support, degrees.
pub const SUPPORT_WINDOW_DEG: f64 = 1.0;
/// Local maxima below this fraction of the profile peak are ignored.
pub const PEAK_FLOOR: f64 = 0.05;

/// Recovered angular profile of one method on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularProfile {
    pub method: Method,
    pub seed: u64,
    /// Effective grid angles in degrees, ascending.
    pub angles_deg: Vec<f64>,
    /// `Σ_n |U_{m,n}|` at each angle.
    pub modulus: Vec<f64>,
    /// `Σ_n |U_{m,n}|²` at each angle.
    pub energy: Vec<f64>,
    pub support_energy_fraction: f64,
}

impl AngularProfile {
    fn new(method: Method, seed: u64, theta_rad: &[f64], modulus: Vec<f64>, energy: Vec<f64>, truth: &[f64]) -> Self {
        let mut idx: Vec<usize> = (0..theta_rad.len()).collect();
        idx.sort_by(|&a, &b| theta_rad[a].total_cmp(&theta_rad[b]));
        let angles_deg: Vec<f64> = idx.iter().map(|&i| theta_rad[i].to_degrees()).collect();
        let modulus: Vec<f64> = idx.iter().map(|&i| modulus[i]).collect();
        let energy: Vec<f64> = idx.iter().map(|&i| energy[i]).collect();
        let support_energy_fraction = support_energy_fraction(&angles_deg, &energy, truth, SUPPORT_WINDOW_DEG);
        Self { method, seed, angles_deg, modulus, energy, support_energy_fraction }
    }

    /// Angles of local maxima of the modulus that reach `floor` times the peak.
    pub fn local_maxima(&self, floor: f64) -> Vec<f64> {
        let peak = self.modulus.iter().cloned().fold(0.0, f64::max);
        let n = self.modulus.len();
        (0..n)
            .filter(|&i| {
                let v = self.modulus[i];
                let left = if i > 0 { self.modulus[i - 1] } else { f64::NEG_INFINITY };
                let right = if i + 1 < n { self.modulus[i + 1] } else { f64::NEG_INFINITY };
                v > 0.0 && v >= floor * peak && v >= left && v >= right
            })
            .map(|i| self.angles_deg[i])
            .collect()
    }

    /// For each true angle, whether a local maximum lies within `window_deg`.
    pub fn captured(&self, truth_deg: &[f64], window_deg: f64, floor: f64) -> Vec<bool> {
        let maxima = self.local_maxima(floor);
        truth_deg.iter().map(|t| maxima.iter().any(|m| (m - t).abs() <= window_deg)).collect()
    }
}

/// Share of `energy` at angles within `window_deg` of any true angle.
pub fn support_energy_fraction(angles_deg: &[f64], energy: &[f64], truth_deg: &[f64], window_deg: f64) -> f64 {
    let total: f64 = energy.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let inside: f64 = angles_deg
        .iter()
        .zip(energy)
        .filter(|(a, _)| truth_deg.iter().any(|t| (*a - t).abs() <= window_deg))
        .map(|(_, e)| e)
        .sum();
    inside / total
}

/// Rows and angular profiles of a support-recovery run.
#[derive(Debug, Clone, Default)]
pub struct SupportReport {
    /// `support_energy_fraction` per method and trial.
    pub rows: Vec<ResultRow>,
    pub profiles: Vec<AngularProfile>,
}

impl SupportReport {
    /// Fractions of `method`, ordered by trial seed.
    pub fn fractions(&self, method: Method) -> Vec<f64> {
        let mut v: Vec<(u64, f64)> =
            self.profiles.iter().filter(|p| p.method == method).map(|p| (p.seed, p.support_energy_fraction)).collect();
        v.sort_by_key(|p| p.0);
        v.into_iter().map(|p| p.1).collect()
    }
}

/// Runs the scenario's methods on every trial of a fixed-path scenario and
/// reports angular profiles and support energy fractions.
pub fn support_recovery_report(scenario: &ScenarioConfig) -> Result<SupportReport, HarnessError> {
    scenario.validate()?;
    let truth = scenario
        .channel
        .fixed_angles()
        .ok_or_else(|| HarnessError::Config("support recovery needs an explicit path list".into()))?
        .to_vec();
    let mut report = SupportReport::default();
    for &v in &scenario.sweep.values {
        let solver = scenario.solver_at(v);
        for t in 0..scenario.trials {
            let data = prepare_trial(scenario, v, t)?;
            for &method in &scenario.methods {
                let run = run_method(method, &data, scenario, &solver, None)?;
                let r = &run.result;
                let profile = AngularProfile::new(
                    method,
                    data.seed,
                    &r.theta,
                    r.angular_modulus(),
                    r.angular_energy(),
                    &truth,
                );
                let mut meta = provenance(method, scenario, &data);
                meta.insert("window_deg".into(), SUPPORT_WINDOW_DEG.to_string());
                report.rows.push(ResultRow {
                    scenario: scenario.id.clone(),
                    method,
                    sweep_value: v,
                    metric: Metric::SupportEnergyFraction,
                    value: profile.support_energy_fraction,
                    trials: 1,
                    seed: data.seed,
                    metadata: meta,
                });
                report.profiles.push(profile);
            }
        }
    }
    sort_rows(&mut report.rows);
    Ok(report)
}
