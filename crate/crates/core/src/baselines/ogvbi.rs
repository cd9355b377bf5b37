use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::burst_vbi::DEFAULT_REFERENCE_POWER;
use crate::error::{Error, Result};
use crate::estimate::{normalize_observation, ChannelObserver, Diagnostics, EstimationResult, TraceKind};
use crate::linalg::{cholesky_jittered, fro_sqr, herm, hpd_inverse, inverse_from_cholesky, trace_prod_re};
use crate::otfs_model::{channel_from_taps, doppler_ramp, shift_matrix, steering_matrices, SystemConfig};
use crate::refinement::{clip_offsets, solve_offsets, taylor_offset_system};
use crate::scalar::{creal, Cx, Real};

/// Settings of the row-sparse (multiple measurement vector) estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct OgvbiParams<T> {
    /// Gamma hyperprior shape.
    pub c: T,
    /// Gamma hyperprior rate.
    pub d: T,
    pub max_iters: usize,
    /// Stop when the relative change of the row estimate falls below this.
    pub tol: T,
    /// Doppler search interval `[-r, r]` (κ units) for the per-tap fit.
    pub kappa_search_range: T,
    /// See [`HyperParams::reference_power`](crate::burst_vbi::HyperParams).
    pub reference_power: Option<T>,
    pub jitter: T,
}

impl<T: Real> Default for OgvbiParams<T> {
    fn default() -> Self {
        Self {
            c: T::of(1e-3),
            d: T::of(1e-3),
            max_iters: 60,
            tol: T::of(1e-6),
            kappa_search_range: T::one(),
            reference_power: Some(T::of(DEFAULT_REFERENCE_POWER)),
            jitter: T::of(1e-10),
        }
    }
}

/// Matched-filter energy `‖C conj(s)‖²` of a candidate tap atom.
fn tap_score<T: Real>(c: &ArrayView2<'_, Cx<T>>, xs: &ArrayView1<'_, Cx<T>>, kappa: T) -> T {
    let ramp = doppler_ramp(kappa, xs.len());
    let s = (xs * &ramp).mapv(|z| z.conj());
    let v = c.dot(&s);
    v.iter().fold(T::zero(), |a, z| a + z.norm_sqr())
}

/// Best `κ` in `[-range, range]`: 21-point scan, then golden-section polish
/// around the best scan point.
pub fn search_tap_doppler<T: Real>(c: &ArrayView2<'_, Cx<T>>, xs: &ArrayView1<'_, Cx<T>>, range: T) -> T {
    if !(range > T::zero()) {
        return T::zero();
    }
    let pts = 21;
    let step = T::of(2.0) * range / T::of_usize(pts - 1);
    let (mut best_k, mut best) = (T::zero(), T::neg_infinity());
    for i in 0..pts {
        let k = -range + step * T::of_usize(i);
        let v = tap_score(c, xs, k);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let ratio = T::of(0.618_033_988_749_895);
    let (mut lo, mut hi) = ((best_k - step).max(-range), (best_k + step).min(range));
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (tap_score(c, xs, x1), tap_score(c, xs, x2));
    for _ in 0..40 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = tap_score(c, xs, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = tap_score(c, xs, x2);
        }
    }
    let mid = (lo + hi) * T::of(0.5);
    if tap_score(c, xs, mid) >= best {
        mid
    } else {
        best_k
    }
}

/// Off-grid sparse Bayesian learning on `Y = A(β) C + W` with row-sparse `C`
/// (`M_θ × L`), a per-row precision and a first-order Taylor model of `A(β)`.
///
/// `Ĥ` is formed per delay tap: `κ_n` maximizes `‖Ĉ conj(s_n(κ))‖²`, then
/// `Ĝ = Ĉ conj(S) (Sᵀ conj(S))⁻¹` and `Ĥ = Σ_n (Δ^{κ_n}Πⁿ) ⊗ (A(θ+β) ĝ_n)`.
pub fn ogvbi_estimate<T: Real>(
    y: &ArrayView2<'_, Cx<T>>,
    x: &ArrayView1<'_, Cx<T>>,
    cfg: &SystemConfig<T>,
    params: &OgvbiParams<T>,
) -> Result<EstimationResult<T>> {
    ogvbi_estimate_observed(y, x, cfg, params, None)
}

/// [`ogvbi_estimate`] that hands the channel reconstructed after every
/// iteration to `observer`.
pub fn ogvbi_estimate_observed<T: Real>(
    y: &ArrayView2<'_, Cx<T>>,
    x: &ArrayView1<'_, Cx<T>>,
    cfg: &SystemConfig<T>,
    params: &OgvbiParams<T>,
    mut observer: Option<&mut ChannelObserver<'_, T>>,
) -> Result<EstimationResult<T>> {
    cfg.validate()?;
    if y.dim() != (cfg.antennas, cfg.pilot_len) || x.len() != cfg.pilot_len {
        return Err(Error::Dimension(format!("observation {:?}, pilot {}", y.dim(), x.len())));
    }
    if !(params.c > T::zero()) || !(params.d > T::zero()) || params.max_iters == 0 || !(params.tol > T::zero()) {
        return Err(Error::Config("ogvbi: c, d, tol and max_iters must be positive".into()));
    }
    let (y_scaled, scale) = normalize_observation(y, params.reference_power);
    let y = y_scaled.view();
    let m = cfg.angle_grid;
    let l = cfg.pilot_len;
    let grid = cfg.angle_grid_points();
    let (a0, b0) = steering_matrices(&grid, cfg);
    let half_cell = cfg.grid_cell() * T::of(0.5);
    let bounds = vec![(-half_cell, half_cell); m];
    let eye_l = Array2::from_diag(&Array1::from_elem(l, creal::<T>(T::one())));

    let mut beta = vec![T::zero(); m];
    // row precisions start at the level that spreads the observed energy evenly
    let y_energy = fro_sqr(&y).max(T::min_positive_value());
    let mut c_gamma = Array1::from_elem(m, T::of_usize(cfg.antennas * m * l));
    let mut d_gamma = Array1::from_elem(m, y_energy);
    // noise precision starts at the value implied by a zero coefficient estimate
    let (mut c_alpha, mut d_alpha) = (params.c + T::of_usize(y.len()), params.d + fro_sqr(&y));
    let mut mean = Array2::<Cx<T>>::zeros((m, l));
    let mut diag = Diagnostics::default();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    for it in 0..params.max_iters {
        let at = &a0 + &(&b0 * &Array1::from_iter(beta.iter().map(|&b| creal::<T>(b))));
        let alpha = c_alpha / d_alpha;
        let gram = herm(&at.view()).dot(&at);
        let mut prec = gram.mapv(|z| z * alpha);
        for i in 0..m {
            prec[[i, i]] += creal(c_gamma[i] / d_gamma[i]);
        }
        let (lc, attempts) = cholesky_jittered(&prec.view(), params.jitter)?;
        diag.jitter_events += usize::from(attempts > 0);
        let (sigma, _) = inverse_from_cholesky(&lc.view());
        let new_mean = sigma.dot(&herm(&at.view()).dot(&y)).mapv(|z| z * alpha);
        if !new_mean.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("ogvbi row estimate"));
        }
        let lf = T::of_usize(l);
        for i in 0..m {
            let row = new_mean.row(i).iter().fold(T::zero(), |a, z| a + z.norm_sqr());
            c_gamma[i] = params.c + lf;
            d_gamma[i] = params.d + row + lf * sigma[[i, i]].re;
        }
        let resid = &y - &at.dot(&new_mean);
        c_alpha = params.c + T::of_usize(y.len());
        d_alpha = params.d + fro_sqr(&resid.view()) + lf * trace_prod_re(&gram.view(), &sigma.view());

        let xi = sigma.mapv(|z| z * lf);
        let ws = taylor_offset_system(&y, &a0.view(), &b0.view(), &new_mean.view(), &eye_l.view(), &xi.view());
        let (b, ridge) = solve_offsets(&ws);
        diag.angle_ridge_fallbacks += usize::from(ridge);
        beta = b.to_vec();
        clip_offsets(&mut beta, &bounds);
        diag.refinement_passes += 1;

        let change = fro_sqr(&(&new_mean - &mean).view()).sqrt() / fro_sqr(&new_mean.view()).sqrt().max(T::min_positive_value());
        mean = new_mean;
        trace.push(change);
        iters = it + 1;
        if let Some(obs) = observer.as_deref_mut() {
            let (h, _, _, _) = reconstruct(&mean, &grid, &beta, x, cfg, params.kappa_search_range)?;
            obs(it, &h.mapv(|z| z / creal(scale)));
        }
        if change <= params.tol {
            converged = true;
            break;
        }
    }

    let (h_hat, u, theta, kappa) = reconstruct(&mean, &grid, &beta, x, cfg, params.kappa_search_range)?;
    Ok(EstimationResult {
        h_hat,
        u,
        theta,
        kappa,
        trace,
        trace_kind: TraceKind::RelativeChange,
        iters,
        alpha_hat: Some(c_alpha / d_alpha),
        converged,
        diagnostics: diag,
        scale: T::one(),
    }
    .unscale(scale))
}

type Reconstruction<T> = (Array2<Cx<T>>, Array2<Cx<T>>, Vec<T>, Vec<T>);

/// Channel, tap coefficients, angles and Doppler values from the row estimate `mean`.
fn reconstruct<T: Real>(
    mean: &Array2<Cx<T>>,
    grid: &[T],
    beta: &[T],
    x: &ArrayView1<'_, Cx<T>>,
    cfg: &SystemConfig<T>,
    kappa_range: T,
) -> Result<Reconstruction<T>> {
    let l = cfg.pilot_len;
    let theta: Vec<T> = grid.iter().zip(beta).map(|(&t, &b)| t + b).collect();
    let (a_ref, _) = steering_matrices(&theta, cfg);
    let xs = shift_matrix(x, cfg.delay_taps);
    let kappa: Vec<T> = (0..cfg.delay_taps)
        .map(|n| search_tap_doppler(&mean.view(), &xs.column(n), kappa_range))
        .collect();
    let mut s = xs.clone();
    for (n, &k) in kappa.iter().enumerate() {
        let ramp = doppler_ramp(k, l);
        let col = &xs.column(n) * &ramp;
        s.column_mut(n).assign(&col);
    }
    let s_conj = s.mapv(|z| z.conj());
    let (gram_inv, _) = hpd_inverse(&s.t().dot(&s_conj).view())?;
    let u = mean.dot(&s_conj).dot(&gram_inv);
    let mut weights = Array2::zeros((l, cfg.delay_taps));
    for (n, &k) in kappa.iter().enumerate() {
        weights.column_mut(n).assign(&doppler_ramp(k, l));
    }
    let spatial = a_ref.dot(&u);
    Ok((channel_from_taps(&spatial.view(), &weights.view()), u, theta, kappa))
}
