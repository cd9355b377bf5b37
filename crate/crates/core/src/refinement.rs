//! Off-grid angle refinement (an EM step on first-order Taylor dictionaries)
//! and Doppler refinement by rooting the likelihood-derivative polynomial.

use ndarray::{Array1, Array2, ArrayView2};

use crate::burst_vbi::PosteriorState;
use crate::error::Result;
use crate::linalg::{fro_sqr, herm, spd_solve_real, trace_prod_re};
use crate::otfs_model::{steering_matrices, DictionaryState};
use crate::poly;
use crate::scalar::{cis, czero, Cx, Real};

/// Normal equations `P β = v` of an offset step.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleRefineWorkspace<T> {
    pub p: Array2<T>,
    pub v: Array1<T>,
}

/// Outcome of one angle refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleUpdate<T> {
    /// Offsets that were absorbed into the grid.
    pub beta: Vec<T>,
    /// New grid.
    pub theta: Vec<T>,
    /// The ridge fallback solved the normal equations.
    pub ridge: bool,
    /// Times the step was halved to keep the likelihood from decreasing.
    pub backtracks: usize,
}

/// Derivative polynomial of the expected log-likelihood in `ω_n = e^{j2πκ_n/L}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerRefineWorkspace<T> {
    /// `eps_coeffs[t-1]` multiplies `ω^t`, `t = 1..=L`, in `ω·D(ω)`; the
    /// stationarity condition is `D(ω) = 0`.
    pub eps_coeffs: Vec<Cx<T>>,
    /// `ϱ_n = μ_nᴴ AᴴA μ_n`.
    pub rho: T,
    /// `tr(AᴴA Σ_n)`, the covariance share of `E‖A g_n‖²`.
    pub spread: T,
    /// Data coupling `c_t`; the κ-dependent likelihood is `2α Re Σ_t c_t ω^t`.
    pub coupling: Vec<Cx<T>>,
    /// Current `ω_n`.
    pub omega: Cx<T>,
}

impl<T: Real> DopplerRefineWorkspace<T> {
    /// `Re Σ_t c_t ω^t`.
    pub fn objective(&self, omega: Cx<T>) -> T {
        poly::eval(&self.coupling, omega).re
    }

    /// `D(ω) = Σ_t ε_t ω^{t-1}`; on the unit circle `α·D(ω)` equals the Wirtinger
    /// derivative `ω ∂/∂ω` of the expected log-likelihood.
    pub fn derivative(&self, omega: Cx<T>) -> Cx<T> {
        poly::eval(&self.eps_coeffs, omega)
    }

    /// `d/dκ` of the expected log-likelihood at `κ` for noise precision `alpha`.
    pub fn kappa_derivative(&self, kappa: T, alpha: T) -> T {
        let len = T::of_usize(self.eps_coeffs.len());
        let omega = cis(T::TAU() * kappa / len);
        -(T::of(4.0) * T::PI() * alpha / len) * self.derivative(omega).im
    }
}

/// Outcome of one Doppler refinement pass over all taps.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerUpdate<T> {
    pub kappa: Vec<T>,
    /// Taps whose polynomial vanished identically.
    pub degenerate: usize,
    /// Taps whose best root would have lowered the likelihood.
    pub rejected: usize,
    /// Modulus of the selected root per tap (`None` when kept).
    pub root_modulus: Vec<Option<T>>,
}

/// `Σ_n ε_n Σ_n`.
pub fn weighted_covariance<T: Real>(state: &PosteriorState<T>, dict: &DictionaryState<T>) -> Array2<Cx<T>> {
    let m = state.angle_grid();
    let mut acc = Array2::zeros((m, m));
    for (sig, &e) in state.sigma.iter().zip(&dict.eps) {
        acc.scaled_add(Cx::new(e, T::zero()), sig);
    }
    acc
}

/// Normal equations of the Taylor offset step for `Y ≈ (base + deriv·diag(β)) G otherᵀ`.
///
/// `u` is `E[G]` and `xi = E[(G-U) W (G-U)ᴴ]` with `W = otherᵀ conj(other)`.
pub fn taylor_offset_system<T: Real>(
    y: &ArrayView2<'_, Cx<T>>,
    base: &ArrayView2<'_, Cx<T>>,
    deriv: &ArrayView2<'_, Cx<T>>,
    u: &ArrayView2<'_, Cx<T>>,
    other: &ArrayView2<'_, Cx<T>>,
    xi: &ArrayView2<'_, Cx<T>>,
) -> AngleRefineWorkspace<T> {
    let z = u.dot(&other.t());
    let resid = y - &base.dot(&z);
    let deriv_h = herm(deriv);
    let br = deriv_h.dot(&resid);
    let cross = xi.dot(&herm(base).dot(deriv));
    let k = u.nrows();
    let mut v = Array1::zeros(k);
    for i in 0..k {
        let mut acc = T::zero();
        for (zt, bt) in z.row(i).iter().zip(br.row(i).iter()) {
            acc += zt.re * bt.re + zt.im * bt.im;
        }
        v[i] = acc - cross[[i, i]].re;
    }
    let w = other.t().dot(&other.mapv(|c| c.conj()));
    let q = u.dot(&w).dot(&herm(u)) + xi;
    let bb = deriv_h.dot(deriv);
    let mut p = Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            let a = bb[[i, j]];
            let b = q[[i, j]];
            p[[i, j]] = a.re * b.re + a.im * b.im;
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            let s = (p[[i, j]] + p[[j, i]]) * T::of(0.5);
            p[[i, j]] = s;
            p[[j, i]] = s;
        }
    }
    AngleRefineWorkspace { p, v }
}

/// Angle normal equations for the independent-tap posterior.
pub fn angle_system<T: Real>(
    state: &PosteriorState<T>,
    dict: &DictionaryState<T>,
    y: &ArrayView2<'_, Cx<T>>,
) -> AngleRefineWorkspace<T> {
    let xi = weighted_covariance(state, dict);
    taylor_offset_system(y, &dict.a.view(), &dict.b.view(), &state.mu.view(), &dict.s.view(), &xi.view())
}

/// Solves `P β = v`, falling back to `(P + εI)β = v` with `ε = 1e-8·tr(P)/K`.
/// Returns the solution and whether the fallback was used.
pub fn solve_offsets<T: Real>(ws: &AngleRefineWorkspace<T>) -> (Array1<T>, bool) {
    if let Ok(b) = spd_solve_real(&ws.p.view(), &ws.v.view()) {
        if b.iter().all(|x| x.is_finite()) {
            return (b, false);
        }
    }
    let k = ws.v.len();
    let tr = (0..k).fold(T::zero(), |a, i| a + ws.p[[i, i]].abs());
    let eps = T::of(1e-8) * tr / T::of_usize(k.max(1));
    let mut ridge = ws.p.clone();
    for i in 0..k {
        ridge[[i, i]] += eps.max(T::min_positive_value());
    }
    match spd_solve_real(&ridge.view(), &ws.v.view()) {
        Ok(b) if b.iter().all(|x| x.is_finite()) => (b, true),
        _ => (Array1::zeros(k), true),
    }
}

/// Per-point offset bounds: at most half a nominal cell and less than half the
/// gap to either neighbour, inside `[-π/2, π/2]`.
pub fn offset_bounds<T: Real>(theta: &[T], half_cell: T) -> Vec<(T, T)> {
    let k = theta.len();
    let frac = T::of(0.45);
    let edge = T::FRAC_PI_2();
    (0..k)
        .map(|m| {
            let left = if m == 0 { (theta[m] + edge).max(T::zero()) } else { frac * (theta[m] - theta[m - 1]) };
            let right = if m + 1 == k { (edge - theta[m]).max(T::zero()) } else { frac * (theta[m + 1] - theta[m]) };
            (-(half_cell.min(left)), half_cell.min(right))
        })
        .collect()
}

/// Clips each offset into its bounds.
pub fn clip_offsets<T: Real>(beta: &mut [T], bounds: &[(T, T)]) {
    for (b, &(lo, hi)) in beta.iter_mut().zip(bounds) {
        *b = if b.is_finite() { b.max(lo).min(hi) } else { T::zero() };
    }
}

fn sq_fit_for<T: Real>(
    a: &ArrayView2<'_, Cx<T>>,
    state: &PosteriorState<T>,
    dict: &DictionaryState<T>,
    y: &ArrayView2<'_, Cx<T>>,
    xi: &ArrayView2<'_, Cx<T>>,
) -> T {
    let resid = y - &a.dot(&state.mu).dot(&dict.s.t());
    let gram = herm(a).dot(a);
    fro_sqr(&resid.view()) + trace_prod_re(&gram.view(), xi)
}

/// Expected log-likelihood `-α̂ E‖Y - A G Sᵀ‖²`, constants dropped.
pub fn expected_log_likelihood<T: Real>(
    state: &PosteriorState<T>,
    dict: &DictionaryState<T>,
    y: &ArrayView2<'_, Cx<T>>,
) -> T {
    -state.alpha_hat() * state.expected_sq_residual(dict, y)
}

/// One EM angle step: solve for offsets, clip, absorb them into the grid and
/// rebuild `A` and `B` with zero offsets. The step is halved (up to 10 times,
/// then dropped) while it would lower the expected log-likelihood.
pub fn refine_angles<T: Real>(
    state: &PosteriorState<T>,
    dict: &mut DictionaryState<T>,
    y: &ArrayView2<'_, Cx<T>>,
) -> Result<AngleUpdate<T>> {
    let ws = angle_system(state, dict, y);
    let (beta, ridge) = solve_offsets(&ws);
    let mut beta = beta.to_vec();
    let theta_now = dict.effective_angles();
    let half_cell = dict.config().grid_cell() * T::of(0.5);
    clip_offsets(&mut beta, &offset_bounds(&theta_now, half_cell));

    let xi = weighted_covariance(state, dict);
    let current = sq_fit_for(&dict.a.view(), state, dict, y, &xi.view());
    let slack = T::eps() * T::of(64.0) * current.abs().max(T::one());
    let mut backtracks = 0;
    loop {
        let cand: Vec<T> = theta_now.iter().zip(&beta).map(|(&t, &b)| t + b).collect();
        let (a_new, _) = steering_matrices(&cand, dict.config());
        let fit = sq_fit_for(&a_new.view(), state, dict, y, &xi.view());
        if fit <= current + slack {
            break;
        }
        backtracks += 1;
        if backtracks > 10 {
            beta.iter_mut().for_each(|b| *b = T::zero());
            break;
        }
        beta.iter_mut().for_each(|b| *b *= T::of(0.5));
    }
    let theta: Vec<T> = theta_now.iter().zip(&beta).map(|(&t, &b)| t + b).collect();
    dict.set_angles(theta.clone());
    Ok(AngleUpdate { beta, theta, ridge, backtracks })
}

fn doppler_workspace_from_residual<T: Real>(
    state: &PosteriorState<T>,
    dict: &DictionaryState<T>,
    gram: &Array2<Cx<T>>,
    resid: &Array2<Cx<T>>,
    n: usize,
) -> DopplerRefineWorkspace<T> {
    let l = dict.s.nrows();
    let h = dict.a.dot(&state.mu.column(n));
    let rho = h.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    let spread = trace_prod_re(&gram.view(), &state.sigma[n].view());
    let s_n = dict.s.column(n);
    let x_n = dict.x_shift.column(n);
    let mut coupling = vec![czero::<T>(); l];
    for t in 0..l {
        // (Y_{-n}ᴴ h)_t with Y_{-n} = R + h s_nᵀ
        let mut acc = czero::<T>();
        for (r, &hr) in h.iter().enumerate() {
            acc += resid[[r, t]].conj() * hr;
        }
        acc += s_n[t].conj() * Cx::new(rho, T::zero());
        coupling[t] = x_n[t] * acc;
    }
    let mut eps_coeffs = vec![czero::<T>(); l];
    let weight = (0..l).fold(T::zero(), |a, t| a + T::of_usize(t) * x_n[t].norm_sqr());
    eps_coeffs[0] = Cx::new(-(rho + spread) * weight, T::zero());
    for t in 1..l {
        eps_coeffs[t] = coupling[t] * T::of_usize(t);
    }
    let omega = cis(T::TAU() * dict.kappa[n] / T::of_usize(l));
    DopplerRefineWorkspace { eps_coeffs, rho, spread, coupling, omega }
}

/// Derivative polynomial for zero-based tap `n` at the current posterior.
pub fn doppler_derivative_coeffs<T: Real>(
    state: &PosteriorState<T>,
    dict: &DictionaryState<T>,
    y: &ArrayView2<'_, Cx<T>>,
    n: usize,
) -> DopplerRefineWorkspace<T> {
    let resid = dict.residual(y, &state.mu.view());
    doppler_workspace_from_residual(state, dict, &dict.gram_a(), &resid, n)
}

/// Chooses the root closest to the unit circle; near-ties go to the larger objective.
/// Returns `None` if the polynomial has no usable root.
pub fn select_root<T: Real>(ws: &DopplerRefineWorkspace<T>) -> Option<Cx<T>> {
    let roots: Vec<Cx<T>> = poly::roots(&ws.eps_coeffs)
        .into_iter()
        .filter(|r| r.re.is_finite() && r.im.is_finite() && r.norm() > T::zero())
        .collect();
    let best = roots.iter().map(|r| (r.norm() - T::one()).abs()).fold(T::infinity(), T::min);
    if !best.is_finite() {
        return None;
    }
    let tie = T::of(1e-9) * best.max(T::one());
    roots
        .into_iter()
        .filter(|r| (r.norm() - T::one()).abs() <= best + tie)
        .map(|r| (r, ws.objective(r / r.norm())))
        .fold(None, |acc: Option<(Cx<T>, T)>, (r, j)| match acc {
            Some((_, bj)) if bj >= j => acc,
            _ => Some((r, j)),
        })
        .map(|(r, _)| r)
}

/// Newton steps on `Re Σ_t c_t ω^t` restricted to the unit circle, started
/// at the projected root. Steps that do not raise the objective are dropped.
fn polish_kappa<T: Real>(ws: &DopplerRefineWorkspace<T>, kappa: T, len: T) -> T {
    let w = T::TAU() / len;
    let mut k = kappa;
    let mut f = ws.objective(cis(w * k));
    for _ in 0..8 {
        let omega = cis(w * k);
        let (mut d1, mut d2) = (czero::<T>(), czero::<T>());
        let mut pw = omega;
        for (t, c) in ws.coupling.iter().enumerate().skip(1) {
            let tt = T::of_usize(t);
            pw = if t == 1 { omega } else { pw * omega };
            d1 += *c * pw * tt;
            d2 += *c * pw * (tt * tt);
        }
        let g = -w * d1.im;
        let h = -w * w * d2.re;
        if !(h < T::zero()) {
            break;
        }
        let step = (-g / h).max(-T::of(0.5)).min(T::of(0.5));
        let f_new = ws.objective(cis(w * (k + step)));
        if !(f_new > f) {
            break;
        }
        k += step;
        f = f_new;
        if step.abs() < T::of(1e-12) {
            break;
        }
    }
    k
}

/// Doppler refinement of every tap in ascending order, each using the residual
/// left by the previous taps. A tap keeps its value when the polynomial
/// vanishes or when the chosen root would lower the likelihood.
pub fn refine_doppler<T: Real>(
    state: &PosteriorState<T>,
    dict: &mut DictionaryState<T>,
    y: &ArrayView2<'_, Cx<T>>,
) -> Result<DopplerUpdate<T>> {
    let l = dict.s.nrows();
    let taps = dict.s.ncols();
    let mut resid = dict.residual(y, &state.mu.view());
    let gram = dict.gram_a();
    let mut degenerate = 0;
    let mut rejected = 0;
    let mut root_modulus = vec![None; taps];
    for n in 0..taps {
        let ws = doppler_workspace_from_residual(state, dict, &gram, &resid, n);
        let Some(root) = select_root(&ws) else {
            degenerate += 1;
            continue;
        };
        let unit = root / root.norm();
        let slack = T::eps() * T::of(64.0) * ws.objective(ws.omega).abs().max(T::one());
        if ws.objective(unit) + slack < ws.objective(ws.omega) {
            rejected += 1;
            continue;
        }
        root_modulus[n] = Some(root.norm());
        let kappa_new = polish_kappa(&ws, T::of_usize(l) * unit.arg() / T::TAU(), T::of_usize(l));
        let old = dict.s.column(n).to_owned();
        dict.set_kappa(n, kappa_new);
        let h = dict.a.dot(&state.mu.column(n));
        let diff = &dict.s.column(n) - &old;
        for (r, &hr) in h.iter().enumerate() {
            for t in 0..l {
                resid[[r, t]] -= hr * diff[t];
            }
        }
    }
    Ok(DopplerUpdate { kappa: dict.kappa.clone(), degenerate, rejected, root_modulus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burst_vbi::HyperParams;
    use crate::otfs_model::{generate_pilot, SystemConfig};
    use crate::rng;
    use rand::Rng;

    fn random_state(cfg: &SystemConfig<f64>, seed: u64) -> PosteriorState<f64> {
        let mut rng = rng::stream(seed, 9);
        let mut s = PosteriorState::init(cfg, &HyperParams::default());
        s.mu.mapv_inplace(|_| Cx::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        for sig in s.sigma.iter_mut() {
            let g = Array2::from_shape_fn((cfg.angle_grid, cfg.angle_grid + 2), |_| {
                Cx::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.1
            });
            *sig = g.dot(&herm(&g.view()));
        }
        s.c_alpha = 3.0;
        s
    }

    fn setup(seed: u64) -> (SystemConfig<f64>, DictionaryState<f64>, Array2<Cx<f64>>) {
        let cfg = SystemConfig::half_wavelength_ula(32, 4, 15e3, 6e9, 10, 6, 9, 4);
        let x = generate_pilot(&cfg, seed).x;
        let dict = DictionaryState::new(&cfg, &x.view(), cfg.angle_grid_points(), vec![0.1, -0.3, 0.05, 0.2]).unwrap();
        let mut rng = rng::stream(seed, 10);
        let y = Array2::from_shape_fn((6, 10), |_| Cx::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        (cfg, dict, y)
    }

    #[test]
    fn p_is_symmetric() {
        let (cfg, dict, y) = setup(1);
        let s = random_state(&cfg, 2);
        let ws = angle_system(&s, &dict, &y.view());
        for i in 0..cfg.angle_grid {
            for j in 0..cfg.angle_grid {
                assert!((ws.p[[i, j]] - ws.p[[j, i]]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn bounds_never_exceed_half_cell() {
        let th: Vec<f64> = vec![-1.5, -1.0, -0.99, 0.2, 1.56];
        let b = offset_bounds(&th, 0.02);
        for (lo, hi) in &b {
            assert!(*lo >= -0.02 && *hi <= 0.02 && lo <= hi);
        }
        assert!((b[1].1 - 0.0045).abs() < 1e-12);
        assert!((b[4].1 - (std::f64::consts::FRAC_PI_2 - 1.56)).abs() < 1e-12);
        let mut beta = vec![1.0, -1.0, f64::NAN, 0.001, 0.0];
        clip_offsets(&mut beta, &b);
        assert_eq!(beta[0], 0.02);
        assert_eq!(beta[2], 0.0);
        assert_eq!(beta[3], 0.001);
    }

    #[test]
    fn zero_mean_leaves_only_constant_term() {
        let (cfg, dict, y) = setup(3);
        let s = PosteriorState::init(&cfg, &HyperParams::default());
        let ws = doppler_derivative_coeffs(&s, &dict, &y.view(), 1);
        assert_eq!(ws.eps_coeffs.len(), cfg.pilot_len);
        assert!(ws.eps_coeffs[1..].iter().all(|c| c.norm() == 0.0));
        assert_eq!(ws.rho, 0.0);
        let weight: f64 = (0..cfg.pilot_len).map(|t| t as f64).sum();
        assert!((ws.eps_coeffs[0].re + ws.spread * weight).abs() < 1e-9 * ws.spread * weight);
        assert!(select_root(&ws).is_none());
        let mut d = dict.clone();
        let upd = refine_doppler(&s, &mut d, &y.view()).unwrap();
        assert_eq!(upd.degenerate, cfg.delay_taps);
        assert_eq!(upd.kappa, dict.kappa);
    }

    #[test]
    fn tie_break_prefers_higher_objective() {
        // roots at ±1 (both on the circle); coupling favours ω = -1
        let ws = DopplerRefineWorkspace {
            eps_coeffs: vec![Cx::new(-1.0, 0.0), Cx::new(0.0, 0.0), Cx::new(1.0, 0.0)],
            rho: 0.0,
            spread: 0.0,
            coupling: vec![Cx::new(0.0, 0.0), Cx::new(-1.0, 0.0)],
            omega: Cx::new(1.0, 0.0),
        };
        let r = select_root(&ws).unwrap();
        assert!((r - Cx::new(-1.0, 0.0)).norm() < 1e-12);
        let ws2 = DopplerRefineWorkspace { coupling: vec![Cx::new(0.0, 0.0), Cx::new(1.0, 0.0)], ..ws };
        assert!((select_root(&ws2).unwrap() - Cx::new(1.0, 0.0)).norm() < 1e-12);
    }
}
