//! One Monte Carlo trial: draw the data once, run every selected method on it.

use std::collections::BTreeMap;
use std::time::Instant;

use ndarray::{Array1, Array2};
use otfs_burst::baselines::{
    l1_estimate_observed, ls_estimate, ogvbi_estimate_observed, vector_ogvbi_estimate_observed, L1Params,
    OgvbiParams, VectorOgvbiParams,
};
use otfs_burst::burst_vbi::{run_solver_observed, PriorMode, SweepView};
use otfs_burst::estimate::{Diagnostics, EstimationResult, TraceKind};
use otfs_burst::otfs_model::{
    draw_cluster_channel, draw_paths_at_angles, full_channel_matrix, generate_pilot, nmse_single,
    synthesize_received_snr, DictionaryState,
};
use otfs_burst::{ChannelRealization64, EstimationResult64, SystemConfig64, C64};

use crate::config::{ChannelSection, Method, ScenarioConfig, SolverSection};
use crate::error::HarnessError;
use crate::results::{Metric, ResultRow};

/// Data shared by every method within a trial.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub cfg: SystemConfig64,
    pub channel: ChannelRealization64,
    pub x: Array1<C64>,
    pub y: Array2<C64>,
    pub h_true: Array2<C64>,
    /// Noise variance per entry.
    pub sigma2: f64,
    pub snr_db: f64,
    pub seed: u64,
}

/// Draws channel, pilot and noise for one trial.
pub fn prepare_trial(scenario: &ScenarioConfig, sweep_value: f64, trial_index: usize) -> Result<TrialData, HarnessError> {
    let cfg = scenario.system_at(sweep_value);
    let seed = scenario.trial_seed(trial_index);
    let snr_db = scenario.snr_at(sweep_value);
    let channel = match &scenario.channel {
        ChannelSection::Clusters { .. } => draw_cluster_channel(&cfg, &scenario.cluster_spec(&cfg), seed)?,
        ChannelSection::Paths { aoa_deg, delay_range, doppler_max_hz } => {
            let range = (delay_range[0], delay_range[1].min(cfg.delay_taps));
            draw_paths_at_angles(&cfg, aoa_deg, range, *doppler_max_hz, seed)?
        }
    };
    let x = generate_pilot(&cfg, seed).x;
    let rb = synthesize_received_snr(&channel, &x.view(), snr_db, seed, &cfg)?;
    let h_true = full_channel_matrix(&channel, &cfg);
    Ok(TrialData { cfg, channel, x, y: rb.y, h_true, sigma2: rb.sigma2, snr_db, seed })
}

fn doppler_max_hz(scenario: &ScenarioConfig) -> f64 {
    match &scenario.channel {
        ChannelSection::Clusters { doppler_max_hz, .. } | ChannelSection::Paths { doppler_max_hz, .. } => {
            *doppler_max_hz
        }
    }
}

/// Output of one method on one trial.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub result: EstimationResult64,
    pub nmse: f64,
    pub runtime_s: f64,
}

fn oracle_result(data: &TrialData) -> EstimationResult64 {
    EstimationResult {
        u: Array2::zeros((data.cfg.angle_grid, data.cfg.delay_taps)),
        theta: data.cfg.angle_grid_points(),
        kappa: data.channel.tap_dopplers(data.cfg.delay_taps),
        h_hat: data.h_true.clone(),
        trace: Vec::new(),
        trace_kind: TraceKind::SinglePass,
        iters: 0,
        alpha_hat: None,
        converged: true,
        diagnostics: Diagnostics::default(),
        scale: 1.0,
    }
}

/// Runs `method` on `data`. With `nmse_trace`, the channel NMSE after every
/// iteration is appended to it.
pub fn run_method(
    method: Method,
    data: &TrialData,
    scenario: &ScenarioConfig,
    solver: &SolverSection,
    nmse_trace: Option<&mut Vec<f64>>,
) -> Result<MethodRun, HarnessError> {
    let (y, x, cfg) = (data.y.view(), data.x.view(), &data.cfg);
    let h_true = &data.h_true;
    let mut trace = nmse_trace;
    let tracing = trace.is_some();
    let mut record = |h: &Array2<C64>| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(nmse_single(h_true, h).unwrap_or(f64::NAN));
        }
    };
    let start = Instant::now();
    let result = match method {
        Method::Oracle => oracle_result(data),
        Method::Ls | Method::L1 => {
            let kappa = data.channel.tap_dopplers(cfg.delay_taps);
            let dict = DictionaryState::new(cfg, &x, cfg.angle_grid_points(), kappa)?;
            if method == Method::Ls {
                ls_estimate(&y, &dict)?
            } else {
                let params = L1Params {
                    lambda: solver.l1_lambda,
                    sigma2: Some(data.sigma2),
                    max_iters: solver.l1_max_iters,
                    // ℓ1 keeps its own stopping rule unless the scenario asks for a tighter one
                    tol: solver.tol.min(1e-8),
                };
                let mut obs = |_: usize, h: &Array2<C64>| record(h);
                l1_estimate_observed(&y, &dict, &params, tracing.then_some(&mut obs as _))?
            }
        }
        Method::Ogvbi => {
            let params = OgvbiParams {
                c: solver.c,
                d: solver.d,
                max_iters: solver.baseline_max_iters,
                tol: solver.tol,
                kappa_search_range: cfg.kappa_from_hz(doppler_max_hz(scenario)),
                reference_power: solver.reference(),
                ..OgvbiParams::default()
            };
            let mut obs = |_: usize, h: &Array2<C64>| record(h);
            ogvbi_estimate_observed(&y, &x, cfg, &params, tracing.then_some(&mut obs as _))?
        }
        Method::VectorOgvbi => {
            let params = VectorOgvbiParams {
                c: solver.c,
                d: solver.d,
                max_iters: solver.baseline_max_iters,
                tol: solver.tol,
                reference_power: solver.reference(),
                memory_budget: solver.memory_budget_mib << 20,
                ..VectorOgvbiParams::default()
            };
            let mut obs = |_: usize, h: &Array2<C64>| record(h);
            vector_ogvbi_estimate_observed(&y, &x, cfg, &params, tracing.then_some(&mut obs as _))?
        }
        Method::FastVbi | Method::Proposed => {
            let prior = if method == Method::Proposed { PriorMode::HybridBurst } else { PriorMode::Iid };
            let hyper = solver.hyper(prior);
            let mut obs = |v: &SweepView<'_, f64>| {
                if tracing {
                    record(&v.channel());
                }
            };
            run_solver_observed(&y, &x, cfg, &hyper, &mut obs)?
        }
    };
    let runtime_s = start.elapsed().as_secs_f64();
    if matches!(result.trace_kind, TraceKind::SinglePass) {
        record(&result.h_hat);
    }
    let nmse = nmse_single(h_true, &result.h_hat)?;
    Ok(MethodRun { method, result, nmse, runtime_s })
}

/// Method provenance and system dimensions attached to every row.
pub fn provenance(method: Method, scenario: &ScenarioConfig, data: &TrialData) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("oracle_kappa".into(), method.uses_true_kappa().to_string());
    m.insert("reconstruction".into(), method.reconstruction().into());
    m.insert("snr_db".into(), data.snr_db.to_string());
    if matches!(method, Method::Proposed | Method::FastVbi) {
        m.insert("refine_angles".into(), scenario.solver.refine_angles.to_string());
        m.insert("refine_doppler".into(), scenario.solver.refine_doppler.to_string());
    }
    let c = &data.cfg;
    m.insert("M".into(), c.subcarriers.to_string());
    m.insert("N".into(), c.frames.to_string());
    m.insert("delta_f_hz".into(), c.subcarrier_spacing.to_string());
    m.insert("f0_hz".into(), c.carrier_freq.to_string());
    m.insert("L".into(), c.pilot_len.to_string());
    m.insert("N_BS".into(), c.antennas.to_string());
    m.insert("M_theta".into(), c.angle_grid.to_string());
    m.insert("N_tau".into(), c.delay_taps.to_string());
    m
}

/// [`provenance`] plus the solver diagnostics of one run.
pub fn method_metadata(run: &MethodRun, scenario: &ScenarioConfig, data: &TrialData) -> BTreeMap<String, String> {
    let mut m = provenance(run.method, scenario, data);
    let r = &run.result;
    m.insert("trace_len".into(), r.trace.len().to_string());
    m.insert("converged".into(), r.converged.to_string());
    m.insert("safeguard_events".into(), r.diagnostics.safeguard_events().to_string());
    m.insert("refinement_passes".into(), r.diagnostics.refinement_passes.to_string());
    m
}

/// A method that failed on a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodFailure {
    pub method: Method,
    pub sweep_value: f64,
    pub seed: u64,
    pub message: String,
}

/// Rows and failures of one trial.
#[derive(Debug, Clone, Default)]
pub struct TrialOutcome {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<MethodFailure>,
}

/// Runs every selected method on one trial's data and reports NMSE and
/// iteration counts. A failing method is recorded and the others still run.
pub fn run_trial(scenario: &ScenarioConfig, sweep_value: f64, trial_index: usize) -> Result<TrialOutcome, HarnessError> {
    let data = prepare_trial(scenario, sweep_value, trial_index)?;
    let solver = scenario.solver_at(sweep_value);
    let mut out = TrialOutcome::default();
    for &method in &scenario.methods {
        match run_method(method, &data, scenario, &solver, None) {
            Ok(run) => {
                let meta = method_metadata(&run, scenario, &data);
                for (metric, value) in [(Metric::Nmse, run.nmse), (Metric::Iterations, run.result.iters as f64)] {
                    out.rows.push(ResultRow {
                        scenario: scenario.id.clone(),
                        method,
                        sweep_value,
                        metric,
                        value,
                        trials: 1,
                        seed: data.seed,
                        metadata: meta.clone(),
                    });
                }
            }
            Err(e) => out.failures.push(MethodFailure {
                method,
                sweep_value,
                seed: data.seed,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}
