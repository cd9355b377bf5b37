use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::estimate::{ChannelObserver, Diagnostics, EstimationResult, TraceKind};
use crate::linalg::{fro_sqr, herm, spectral_norm_sqr};
use crate::otfs_model::DictionaryState;
use crate::scalar::{Cx, Real};

/// Settings of the ℓ1-regularized estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Params<T> {
    /// Explicit weight; overrides the universal-threshold rule.
    pub lambda: Option<T>,
    /// Noise variance per entry, used by the universal-threshold rule.
    pub sigma2: Option<T>,
    pub max_iters: usize,
    /// Stop at this relative objective change.
    pub tol: T,
}

impl<T: Real> Default for L1Params<T> {
    fn default() -> Self {
        Self { lambda: None, sigma2: None, max_iters: 2000, tol: T::of(1e-8) }
    }
}

/// `λ = σ ‖φ‖ √(2 ln p)` with `‖φ‖` the largest column norm of `S ⊗ A`
/// and `p = N_τ M_θ`.
pub fn universal_lambda<T: Real>(sigma2: T, dict: &DictionaryState<T>) -> T {
    let p = T::of_usize(dict.a.ncols() * dict.s.ncols());
    let eps_max = dict.eps.iter().cloned().fold(T::zero(), T::max);
    let col = (eps_max * T::of_usize(dict.a.nrows())).sqrt();
    sigma2.sqrt() * col * (T::of(2.0) * p.ln()).sqrt()
}

/// `z · max(0, 1 - τ/|z|)`.
pub fn soft_threshold<T: Real>(z: Cx<T>, tau: T) -> Cx<T> {
    let r = z.norm();
    if r <= tau {
        Cx::new(T::zero(), T::zero())
    } else {
        z * ((r - tau) / r)
    }
}

fn objective<T: Real>(dict: &DictionaryState<T>, y: &ArrayView2<'_, Cx<T>>, g: &Array2<Cx<T>>, lambda: T) -> (T, T) {
    let smooth = fro_sqr(&dict.residual(y, &g.view()).view());
    let l1 = g.iter().fold(T::zero(), |a, z| a + z.norm());
    (smooth, smooth + lambda * l1)
}

/// Minimizes `‖vec(Y) - Φ g‖² + λ‖g‖₁` by accelerated proximal gradient with
/// backtracking; `Φ` is applied through `A G Sᵀ`.
pub fn l1_estimate<T: Real>(
    y: &ArrayView2<'_, Cx<T>>,
    dict: &DictionaryState<T>,
    params: &L1Params<T>,
) -> Result<EstimationResult<T>> {
    l1_estimate_observed(y, dict, params, None)
}

/// [`l1_estimate`] with a per-iteration channel observer.
pub fn l1_estimate_observed<T: Real>(
    y: &ArrayView2<'_, Cx<T>>,
    dict: &DictionaryState<T>,
    params: &L1Params<T>,
    mut observer: Option<&mut ChannelObserver<'_, T>>,
) -> Result<EstimationResult<T>> {
    if y.dim() != (dict.a.nrows(), dict.s.nrows()) {
        return Err(Error::Dimension(format!("observation {:?}", y.dim())));
    }
    if params.max_iters == 0 || !(params.tol > T::zero()) {
        return Err(Error::Config("l1: max_iters and tol must be positive".into()));
    }
    let lambda = match (params.lambda, params.sigma2) {
        (Some(l), _) => l,
        (None, Some(s2)) => universal_lambda(s2, dict),
        (None, None) => return Err(Error::Config("l1: need lambda or sigma2".into())),
    };
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::Config("l1: lambda must be finite and non-negative".into()));
    }
    let (m, taps) = (dict.a.ncols(), dict.s.ncols());
    let ah = herm(&dict.a.view());
    let s_conj = dict.s.mapv(|z| z.conj());
    let two = T::of(2.0);
    let grad = |g: &Array2<Cx<T>>| -> (Array2<Cx<T>>, T) {
        let r = dict.residual(y, &g.view());
        (ah.dot(&r).dot(&s_conj).mapv(|z| z * (-two)), fro_sqr(&r.view()))
    };
    let mut lip = two
        * spectral_norm_sqr(&dict.a.view(), 50)
        * spectral_norm_sqr(&dict.s.view(), 50);
    if !(lip > T::zero()) {
        lip = T::one();
    }
    let mut g = Array2::<Cx<T>>::zeros((m, taps));
    let mut z = g.clone();
    let mut t = T::one();
    let (_, mut obj) = objective(dict, y, &g, lambda);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    for it in 0..params.max_iters {
        let (gz, fz) = grad(&z);
        let next = loop {
            let step = T::one() / lip;
            let cand = (&z - &gz.mapv(|v| v * step)).mapv(|v| soft_threshold(v, lambda * step));
            let diff = &cand - &z;
            let lin = gz.iter().zip(diff.iter()).fold(T::zero(), |a, (p, q)| a + p.re * q.re + p.im * q.im);
            let (fc, _) = objective(dict, y, &cand, T::zero());
            if fc <= fz + lin + lip / two * fro_sqr(&diff.view()) * (T::one() + T::of(1e-12)) || lip > T::of(1e30) {
                break cand;
            }
            lip *= two;
        };
        let t_next = (T::one() + (T::one() + T::of(4.0) * t * t).sqrt()) / two;
        let mom = (t - T::one()) / t_next;
        z = &next + &(&next - &g).mapv(|v| v * mom);
        g = next;
        t = t_next;
        let (_, new_obj) = objective(dict, y, &g, lambda);
        trace.push(new_obj);
        iters = it + 1;
        if let Some(obs) = observer.as_deref_mut() {
            obs(it, &dict.reconstruct(&g.view()));
        }
        let change = (obj - new_obj).abs();
        obj = new_obj;
        if change <= params.tol * obj.abs() || obj == T::zero() {
            converged = true;
            break;
        }
    }
    Ok(EstimationResult {
        h_hat: dict.reconstruct(&g.view()),
        theta: dict.effective_angles(),
        kappa: dict.kappa.clone(),
        u: g,
        trace,
        trace_kind: TraceKind::Objective,
        iters,
        alpha_hat: None,
        converged,
        diagnostics: Diagnostics::default(),
        scale: T::one(),
    })
}
