use ndarray::{Array2, ArrayView1, ArrayView2};

use super::free_energy::free_energy;
use super::hyper::{HyperParams, PriorMode};
use super::state::PosteriorState;
use crate::error::{Error, Result};
use crate::estimate::{normalize_observation, Diagnostics, EstimationResult, TraceKind};
use crate::otfs_model::{DictionaryState, SystemConfig};
use crate::refinement::{refine_angles, refine_doppler};
use crate::scalar::{Cx, Real};

/// Solver state handed to an [`Observer`] after each sweep.
pub struct SweepView<'a, T> {
    /// Zero-based sweep index.
    pub iter: usize,
    pub dict: &'a DictionaryState<T>,
    /// Posterior of the rescaled problem.
    pub state: &'a PosteriorState<T>,
    /// Factor the observation was multiplied by.
    pub scale: T,
    /// Free energy of this sweep.
    pub free_energy: T,
}

impl<T: Real> SweepView<'_, T> {
    /// Channel estimate at this sweep on the original scale.
    pub fn channel(&self) -> Array2<Cx<T>> {
        let inv = Cx::new(T::one() / self.scale, T::zero());
        self.dict.reconstruct(&self.state.mu.view()).mapv(|z| z * inv)
    }
}

/// Callback invoked after every sweep.
pub type Observer<'a, T> = dyn FnMut(&SweepView<'_, T>) + 'a;

/// Runs the estimator from the on-grid dictionary with zero Doppler.
pub fn run_solver<T: Real>(
    y: &ArrayView2<'_, Cx<T>>,
    x: &ArrayView1<'_, Cx<T>>,
    cfg: &SystemConfig<T>,
    hyper: &HyperParams<T>,
) -> Result<EstimationResult<T>> {
    run_solver_observed(y, x, cfg, hyper, &mut |_| {})
}

/// [`run_solver`] with a per-sweep observer.
pub fn run_solver_observed<T: Real>(
    y: &ArrayView2<'_, Cx<T>>,
    x: &ArrayView1<'_, Cx<T>>,
    cfg: &SystemConfig<T>,
    hyper: &HyperParams<T>,
    observer: &mut Observer<'_, T>,
) -> Result<EstimationResult<T>> {
    let dict = DictionaryState::on_grid(cfg, x)?;
    run_solver_from(y, dict, hyper, observer)
}

/// Runs the estimator from a given dictionary state. The observation is first
/// rescaled to `hyper.reference_power`; the result is on the original scale.
pub fn run_solver_from<T: Real>(
    y: &ArrayView2<'_, Cx<T>>,
    mut dict: DictionaryState<T>,
    hyper: &HyperParams<T>,
    observer: &mut Observer<'_, T>,
) -> Result<EstimationResult<T>> {
    hyper.validate()?;
    let cfg = dict.config().clone();
    if y.dim() != (cfg.antennas, cfg.pilot_len) {
        return Err(Error::Dimension(format!(
            "observation {:?}, expected {}x{}",
            y.dim(),
            cfg.antennas,
            cfg.pilot_len
        )));
    }
    let (y_scaled, scale) = normalize_observation(y, hyper.reference_power);
    let y = &y_scaled.view();
    let mut state = PosteriorState::init(&cfg, hyper);
    let mut diag = Diagnostics::default();
    let mut trace = Vec::with_capacity(hyper.max_iters);
    let mut converged = false;
    let mut iters = 0;
    for it in 0..hyper.max_iters {
        state.update_g_factors(&dict, y, hyper)?;
        match hyper.prior {
            PriorMode::HybridBurst => {
                state.update_hyper_gamma(hyper)?;
                state.update_hyper_rho(hyper)?;
                state.update_noise_precision(&dict, y, hyper)?;
                if !hyper.freeze_assignments {
                    state.update_assignments(hyper)?;
                }
            }
            PriorMode::Iid => {
                state.update_iid_precisions(hyper)?;
                state.update_noise_precision(&dict, y, hyper)?;
            }
        }
        let fe = free_energy(&state, &dict, y, hyper)?;
        if !fe.is_finite() {
            return Err(Error::NonFinite("free energy"));
        }
        if hyper.refine.active(it) {
            diag.refinement_passes += 1;
            if hyper.refine.angles {
                let upd = refine_angles(&state, &mut dict, y)?;
                diag.angle_ridge_fallbacks += usize::from(upd.ridge);
                diag.angle_backtracks += upd.backtracks;
            }
            if hyper.refine.doppler {
                let upd = refine_doppler(&state, &mut dict, y)?;
                diag.doppler_degenerate += upd.degenerate;
                diag.doppler_rejected += upd.rejected;
            }
        }
        observer(&SweepView { iter: it, dict: &dict, state: &state, scale, free_energy: fe });
        iters = it + 1;
        let prev = trace.last().copied();
        trace.push(fe);
        if let Some(p) = prev {
            if (fe - p).abs() <= hyper.tol * p.abs() {
                converged = true;
                break;
            }
        }
    }
    diag.jitter_events = state.jitter_events;
    Ok(EstimationResult {
        h_hat: dict.reconstruct(&state.mu.view()),
        u: state.mu.clone(),
        theta: dict.effective_angles(),
        kappa: dict.kappa.clone(),
        trace,
        trace_kind: TraceKind::FreeEnergy,
        iters,
        alpha_hat: Some(state.alpha_hat()),
        converged,
        diagnostics: diag,
        scale: T::one(),
    }
    .unscale(scale))
}
