use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default observation power used by the Bayesian estimators.
pub const DEFAULT_REFERENCE_POWER: f64 = 1e4;

/// Sparsity prior on the angle-delay coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMode {
    /// Shared angular precisions `γ` coupled to neighbours by assignments `z`,
    /// times per-tap precisions `ρ`.
    HybridBurst,
    /// Independent precision `ξ_{m,n}` per coefficient.
    Iid,
}

/// When angle and Doppler refinement run inside the solver loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineSchedule {
    pub angles: bool,
    pub doppler: bool,
    /// Sweeps to run before the first refinement.
    pub burn_in: usize,
}

impl RefineSchedule {
    /// Angle and Doppler refinement after every sweep.
    pub fn every_sweep() -> Self {
        Self { angles: true, doppler: true, burn_in: 0 }
    }

    /// No refinement; the grid and Doppler values stay fixed.
    pub fn disabled() -> Self {
        Self { angles: false, doppler: false, burn_in: 0 }
    }

    /// Whether refinement runs after zero-based sweep `iter`.
    pub fn active(&self, iter: usize) -> bool {
        (self.angles || self.doppler) && iter >= self.burn_in
    }
}

/// Solver hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams<T> {
    /// Gamma hyperprior shape.
    pub c: T,
    /// Gamma hyperprior rate.
    pub d: T,
    pub max_iters: usize,
    /// Stop when the relative free-energy change falls below this.
    pub tol: T,
    pub prior: PriorMode,
    pub refine: RefineSchedule,
    /// Keep every assignment row at `(0, 1, 0)` instead of learning it.
    pub freeze_assignments: bool,
    /// Relative diagonal jitter used when a covariance fails to factor.
    pub jitter: T,
    /// Mean per-entry power the observation is rescaled to before inference
    /// (`None` runs on the raw data). Estimates are mapped back afterwards.
    pub reference_power: Option<T>,
}

impl<T: Real> Default for HyperParams<T> {
    fn default() -> Self {
        Self {
            c: T::of(1e-3),
            d: T::of(1e-3),
            max_iters: 80,
            tol: T::of(1e-6),
            prior: PriorMode::HybridBurst,
            refine: RefineSchedule::every_sweep(),
            freeze_assignments: false,
            jitter: T::of(1e-10),
            reference_power: Some(T::of(DEFAULT_REFERENCE_POWER)),
        }
    }
}

impl<T: Real> HyperParams<T> {
    /// Defaults with the i.i.d. prior (the Fast-VBI variant).
    pub fn iid() -> Self {
        Self { prior: PriorMode::Iid, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > T::zero()) || !(self.d > T::zero()) {
            return Err(Error::Config("hyperprior shape and rate must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if !(self.jitter > T::zero()) {
            return Err(Error::Config("jitter must be positive".into()));
        }
        if let Some(p) = self.reference_power {
            if !(p > T::zero()) || !p.is_finite() {
                return Err(Error::Config("reference power must be positive and finite".into()));
            }
        }
        Ok(())
    }
}
