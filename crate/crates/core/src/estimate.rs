//! Output type shared by the proposed solver and the baselines.

use ndarray::{Array2, ArrayView2};

use crate::linalg::fro_sqr;
use crate::scalar::{Cx, Real};

/// Rescales `y` to mean per-entry power `reference` and returns the factor `k`
/// with `y' = k·y`. An all-zero or `None` request returns `k = 1`.
pub fn normalize_observation<T: Real>(y: &ArrayView2<'_, Cx<T>>, reference: Option<T>) -> (Array2<Cx<T>>, T) {
    let power = fro_sqr(y) / T::of_usize(y.len().max(1));
    match reference {
        Some(p) if power > T::zero() && power.is_finite() => {
            let k = (p / power).sqrt();
            (y.mapv(|z| z * k), k)
        }
        _ => (y.to_owned(), T::one()),
    }
}

/// Receives the zero-based iteration index and the channel reconstructed
/// after that iteration, on the scale of the input observation.
pub type ChannelObserver<'a, T> = dyn FnMut(usize, &Array2<Cx<T>>) + 'a;

/// What the per-iteration trace of an [`EstimationResult`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Negative variational free energy (higher is better).
    FreeEnergy,
    /// Penalized least-squares objective (lower is better).
    Objective,
    /// Relative change of the posterior mean between iterations.
    RelativeChange,
    /// Closed-form estimator with a single pass.
    SinglePass,
}

/// Counters for numerical safeguards that fired during a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Covariance factorizations that needed diagonal jitter.
    pub jitter_events: usize,
    /// Angle steps solved with the ridge fallback.
    pub angle_ridge_fallbacks: usize,
    /// Angle steps that were shortened to keep the likelihood from decreasing.
    pub angle_backtracks: usize,
    /// Doppler updates skipped because the derivative polynomial vanished.
    pub doppler_degenerate: usize,
    /// Doppler roots rejected because they lowered the likelihood.
    pub doppler_rejected: usize,
    /// Refinement passes executed.
    pub refinement_passes: usize,
}

impl Diagnostics {
    /// Sum of all safeguard counters.
    pub fn safeguard_events(&self) -> usize {
        self.jitter_events
            + self.angle_ridge_fallbacks
            + self.angle_backtracks
            + self.doppler_degenerate
            + self.doppler_rejected
    }
}

/// Estimated coefficients, refined grids and the reconstructed channel.
#[derive(Debug, Clone)]
pub struct EstimationResult<T> {
    /// `M_θ × N_τ` coefficient estimate.
    pub u: Array2<Cx<T>>,
    /// Effective grid angles `θ_m + β_m`.
    pub theta: Vec<T>,
    /// Per-tap Doppler values.
    pub kappa: Vec<T>,
    /// Reconstructed channel, `L·N_BS × L`.
    pub h_hat: Array2<Cx<T>>,
    /// One entry per iteration; see [`TraceKind`].
    pub trace: Vec<T>,
    pub trace_kind: TraceKind,
    /// Iterations performed.
    pub iters: usize,
    /// Noise-precision estimate (`1/σ²`), if the method produces one.
    pub alpha_hat: Option<T>,
    /// Whether the stopping rule fired before the iteration cap.
    pub converged: bool,
    pub diagnostics: Diagnostics,
    /// Factor the observation was multiplied by before inference.
    pub scale: T,
}

impl<T: Real> EstimationResult<T> {
    /// Maps estimates obtained on `k·Y` back to the scale of `Y`.
    pub fn unscale(mut self, k: T) -> Self {
        if k != T::one() {
            let inv = Cx::new(T::one() / k, T::zero());
            self.u.mapv_inplace(|z| z * inv);
            self.h_hat.mapv_inplace(|z| z * inv);
            self.alpha_hat = self.alpha_hat.map(|a| a * k * k);
        }
        self.scale = k;
        self
    }

    /// Per-grid-point energy `Σ_n |U_{m,n}|²`.
    pub fn angular_energy(&self) -> Vec<T> {
        self.u.rows().into_iter().map(|r| r.iter().fold(T::zero(), |a, z| a + z.norm_sqr())).collect()
    }

    /// Per-grid-point modulus `Σ_n |U_{m,n}|`.
    pub fn angular_modulus(&self) -> Vec<T> {
        self.u.rows().into_iter().map(|r| r.iter().fold(T::zero(), |a, z| a + z.norm())).collect()
    }
}
