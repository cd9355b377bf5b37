use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Zip};

use super::vectorized::{check_memory, DEFAULT_MEMORY_BUDGET};
use crate::burst_vbi::DEFAULT_REFERENCE_POWER;
use crate::error::{Error, Result};
use crate::estimate::{normalize_observation, ChannelObserver, Diagnostics, EstimationResult, TraceKind};
use crate::linalg::{cholesky_jittered, fro_sqr, herm, logdet_from_cholesky, lower_inverse};
use crate::otfs_model::{channel_from_taps, doppler_ramp, shift_matrix, steering_matrices, SystemConfig};
use crate::refinement::{clip_offsets, solve_offsets, taylor_offset_system};
use crate::scalar::{creal, Cx, Real};

/// Settings of the vectorized off-grid estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorOgvbiParams<T> {
    pub c: T,
    pub d: T,
    pub max_iters: usize,
    /// Stop when the relative change of the coefficient estimate falls below this.
    pub tol: T,
    /// Bound on the Doppler offsets (κ units) around zero.
    pub kappa_clip: T,
    /// See [`HyperParams::reference_power`](crate::burst_vbi::HyperParams).
    pub reference_power: Option<T>,
    pub jitter: T,
    /// Allocation budget for the posterior factors, in bytes.
    pub memory_budget: usize,
}

impl<T: Real> Default for VectorOgvbiParams<T> {
    fn default() -> Self {
        Self {
            c: T::of(1e-3),
            d: T::of(1e-3),
            max_iters: 60,
            tol: T::of(1e-6),
            kappa_clip: T::of(0.5),
            reference_power: Some(T::of(DEFAULT_REFERENCE_POWER)),
            jitter: T::of(1e-10),
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

/// Exact Gaussian posterior of `vec(G)` under `vec(Y) = (S ⊗ A) vec(G) + w`
/// with per-entry prior precisions, held in low-rank (Woodbury) form.
#[derive(Debug, Clone)]
pub struct VectorPosterior<T> {
    /// `M_θ × N_τ` posterior mean.
    pub mean: Array2<Cx<T>>,
    /// `M_θ × N_τ` posterior variances `[Σ]_{(m,n),(m,n)}`.
    pub variance: Array2<T>,
    /// `tr((S⊗A)ᴴ(S⊗A) Σ)`.
    pub fit_trace: T,
    /// `ln det Σ`.
    pub logdet: T,
    /// Cross-covariance contraction for the angle offsets,
    /// `E[(G-U) W (G-U)ᴴ]` with `W = Sᵀ conj(S)`.
    pub angle_xi: Array2<Cx<T>>,
    /// `E[(G-U)ᵀ W (G-U)ᵀᴴ]` with `W = Aᵀ conj(A)`.
    pub doppler_xi: Array2<Cx<T>>,
    pub jittered: bool,
}

/// `x = q r` with orthonormal `q`; `q = I` when `x` has no more rows than columns.
fn compress<T: Real>(x: &Array2<Cx<T>>, jitter: T) -> Result<(Array2<Cx<T>>, Array2<Cx<T>>)> {
    let (rows, cols) = x.dim();
    if rows <= cols {
        return Ok((crate::linalg::eye(rows), x.clone()));
    }
    let gram = herm(&x.view()).dot(x);
    let (l, _) = cholesky_jittered(&gram.view(), jitter)?;
    let li = lower_inverse(&l.view());
    Ok((x.dot(&herm(&li.view())), herm(&l.view())))
}

/// Posterior for dictionaries `a` (`N_BS × M_θ`), `s` (`L × N_τ`), prior
/// precisions `prec` (`M_θ × N_τ`) and noise precision `alpha`.
pub fn vector_posterior<T: Real>(
    a: &Array2<Cx<T>>,
    s: &Array2<Cx<T>>,
    y: &ArrayView2<'_, Cx<T>>,
    prec: &ArrayView2<'_, T>,
    alpha: T,
    jitter: T,
    memory_budget: usize,
) -> Result<VectorPosterior<T>> {
    let (m, taps) = prec.dim();
    let (qa, ra) = compress(a, jitter)?;
    let (qs, rs) = compress(s, jitter)?;
    let (na, ns) = (ra.nrows(), rs.nrows());
    let r = na * ns;
    check_memory::<T>(3 * r * r + 4 * m * m + 2 * m * taps, memory_budget)?;
    let dinv = prec.mapv(|p| T::one() / p);

    // K = α⁻¹ I + Σ_n (r_s,n r_s,nᴴ) ⊗ (R_A diag(d_n) R_Aᴴ)
    let wn: Vec<Array2<Cx<T>>> = (0..taps)
        .map(|n| {
            let scaled = &ra * &dinv.column(n).mapv(creal);
            scaled.dot(&herm(&ra.view()))
        })
        .collect();
    let mut k = Array2::<Cx<T>>::zeros((r, r));
    for i in 0..ns {
        for j in 0..=i {
            let mut block = k.slice_mut(s![i * na..(i + 1) * na, j * na..(j + 1) * na]);
            for (n, w) in wn.iter().enumerate() {
                let coef = rs[[i, n]] * rs[[j, n]].conj();
                if coef.norm_sqr() > T::zero() {
                    block.scaled_add(coef, w);
                }
            }
        }
    }
    for i in 0..ns {
        for j in 0..i {
            let blk = herm(&k.slice(s![i * na..(i + 1) * na, j * na..(j + 1) * na]));
            k.slice_mut(s![j * na..(j + 1) * na, i * na..(i + 1) * na]).assign(&blk);
        }
    }
    let inv_alpha = T::one() / alpha;
    for i in 0..r {
        k[[i, i]] += creal(inv_alpha);
    }
    let (lk, attempts) = cholesky_jittered(&k.view(), jitter)?;
    drop(k);
    let linv = lower_inverse(&lk.view());
    let linv_c = linv.mapv(|z| z.conj());
    // lower blocks of K⁻¹ = L⁻ᴴ L⁻¹; L⁻¹ is lower triangular so block (i, j)
    // only sums over block rows k ≥ i
    let mut kinv = Array2::<Cx<T>>::zeros((r, r));
    for i in 0..ns {
        let rows = s![i * na.., i * na..(i + 1) * na];
        for j in 0..=i {
            let mut blk = kinv.slice_mut(s![i * na..(i + 1) * na, j * na..(j + 1) * na]);
            general_mat_mul(
                creal(T::one()),
                &linv_c.slice(rows).t(),
                &linv.slice(s![i * na.., j * na..(j + 1) * na]),
                creal(T::zero()),
                &mut blk,
            );
        }
    }
    drop(linv_c);

    // μ = D⁻¹ Fᴴ K⁻¹ ỹ with ỹ = vec(Q_Aᴴ Y conj(Q_S))
    let ytil = herm(&qa.view()).dot(y).dot(&qs.mapv(|z| z.conj()));
    let yv = Array1::from_iter((0..ns).flat_map(|j| ytil.column(j).to_vec()));
    let z = herm(&linv.view()).dot(&linv.dot(&yv));
    drop(linv);
    let zm = Array2::from_shape_fn((na, ns), |(a_, j)| z[j * na + a_]);
    let fz = herm(&ra.view()).dot(&zm).dot(&rs.mapv(|c| c.conj()));
    let mean = Array2::from_shape_fn((m, taps), |(i, n)| fz[[i, n]] * dinv[[i, n]]);

    // Contractions of the low-rank correction D⁻¹ Fᴴ K⁻¹ F D⁻¹ through the
    // blocks Q_ij = R_Aᴴ K⁻¹_ij R_A. Pairs (j, i) with j > i contribute the
    // conjugate transposes of the (i, j) terms.
    let w_s = s.t().dot(&s.mapv(|c| c.conj()));
    let w_a = a.t().dot(&a.mapv(|c| c.conj()));
    let dmat = dinv.mapv(creal);
    let p_mats: Vec<Array2<Cx<T>>> = (0..ns)
        .map(|i| Array2::from_shape_fn((taps, m), |(n, mm)| rs[[i, n]] * dmat[[mm, n]]))
        .collect();
    let wp: Vec<Array2<Cx<T>>> = p_mats.iter().map(|p| w_s.dot(p)).collect();
    let ra_h = herm(&ra.view());
    let mut var_corr = Array2::<T>::zeros((m, taps));
    let mut angle_diag = Array2::<Cx<T>>::zeros((m, m));
    let mut angle_off = Array2::<Cx<T>>::zeros((m, m));
    let mut dopp_diag = Array2::<Cx<T>>::zeros((taps, taps));
    let mut dopp_off = Array2::<Cx<T>>::zeros((taps, taps));
    let mut wq = Array2::<Cx<T>>::zeros((m, m));
    for i in 0..ns {
        let p_ih = herm(&p_mats[i].view());
        for j in 0..=i {
            let kij = kinv.slice(s![i * na..(i + 1) * na, j * na..(j + 1) * na]);
            let q = ra_h.dot(&kij.dot(&ra));
            let mult = if i == j { T::one() } else { T::of(2.0) };
            for n in 0..taps {
                let coef = rs[[i, n]].conj() * rs[[j, n]];
                for mm in 0..m {
                    var_corr[[mm, n]] += mult * (coef * q[[mm, mm]]).re;
                }
            }
            let (angle_acc, dopp_acc) =
                if i == j { (&mut angle_diag, &mut dopp_diag) } else { (&mut angle_off, &mut dopp_off) };
            let x = p_ih.dot(&wp[j]);
            Zip::from(&mut *angle_acc).and(&q).and(&x).for_each(|o, &qv, &xv| *o += qv * xv);
            Zip::from(&mut wq).and(&w_a).and(&q).for_each(|o, &wv, &qv| *o = wv * qv);
            let yij = dmat.t().dot(&wq).dot(&dmat);
            for n in 0..taps {
                let ci = rs[[i, n]].conj();
                for n2 in 0..taps {
                    dopp_acc[[n, n2]] += ci * rs[[j, n2]] * yij[[n, n2]];
                }
            }
        }
    }
    let angle_corr = angle_diag + &angle_off + &herm(&angle_off.view());
    let dopp_corr = dopp_diag + &dopp_off + &herm(&dopp_off.view());
    let variance = Array2::from_shape_fn((m, taps), |(i, n)| {
        let d = dinv[[i, n]];
        (d - d * d * var_corr[[i, n]]).max(T::zero())
    });
    let mut angle_xi = -angle_corr;
    for n in 0..taps {
        let wnn = w_s[[n, n]].re;
        for i in 0..m {
            angle_xi[[i, i]] += creal(wnn * dinv[[i, n]]);
        }
    }
    let mut doppler_xi = -dopp_corr;
    for n in 0..taps {
        let acc = (0..m).fold(T::zero(), |acc, i| acc + w_a[[i, i]].re * dinv[[i, n]]);
        doppler_xi[[n, n]] += creal(acc);
    }
    let tr_kinv = (0..r).fold(T::zero(), |acc, i| acc + kinv[[i, i]].re);
    let fit_trace = T::of_usize(r) * inv_alpha - tr_kinv * inv_alpha * inv_alpha;
    // det Σ = det D⁻¹ · det(α⁻¹I)/det K
    let logdet = dinv.iter().fold(T::zero(), |acc, &v| acc + v.ln()) - T::of_usize(r) * alpha.ln()
        - logdet_from_cholesky(&lk.view());
    Ok(VectorPosterior { mean, variance, fit_trace, logdet, angle_xi, doppler_xi, jittered: attempts > 0 })
}

fn derivative_atoms<T: Real>(s: &Array2<Cx<T>>) -> Array2<Cx<T>> {
    let l = s.nrows();
    let w = T::TAU() / T::of_usize(l);
    Array2::from_shape_fn(s.dim(), |(t, n)| s[[t, n]] * Cx::new(T::zero(), w * T::of_usize(t)))
}

/// Variational Bayes on the vectorized model with per-entry Gamma precisions,
/// first-order Taylor models of both `A(β)` and `S(κ)` (around the angle grid
/// and zero Doppler), and the exact joint posterior of all coefficients.
pub fn vector_ogvbi_estimate<T: Real>(
    y: &ArrayView2<'_, Cx<T>>,
    x: &ArrayView1<'_, Cx<T>>,
    cfg: &SystemConfig<T>,
    params: &VectorOgvbiParams<T>,
) -> Result<EstimationResult<T>> {
    vector_ogvbi_estimate_observed(y, x, cfg, params, None)
}

/// [`vector_ogvbi_estimate`] with a per-iteration channel observer.
pub fn vector_ogvbi_estimate_observed<T: Real>(
    y: &ArrayView2<'_, Cx<T>>,
    x: &ArrayView1<'_, Cx<T>>,
    cfg: &SystemConfig<T>,
    params: &VectorOgvbiParams<T>,
    mut observer: Option<&mut ChannelObserver<'_, T>>,
) -> Result<EstimationResult<T>> {
    cfg.validate()?;
    if y.dim() != (cfg.antennas, cfg.pilot_len) || x.len() != cfg.pilot_len {
        return Err(Error::Dimension(format!("observation {:?}, pilot {}", y.dim(), x.len())));
    }
    if !(params.c > T::zero()) || !(params.d > T::zero()) || params.max_iters == 0 || !(params.tol > T::zero()) {
        return Err(Error::Config("vector_ogvbi: c, d, tol and max_iters must be positive".into()));
    }
    let (y_scaled, scale) = normalize_observation(y, params.reference_power);
    let y = y_scaled.view();
    let (m, taps) = (cfg.angle_grid, cfg.delay_taps);
    let grid = cfg.angle_grid_points();
    let (a0, b0) = steering_matrices(&grid, cfg);
    let s0 = shift_matrix(x, taps);
    let s0d = derivative_atoms(&s0);
    let half_cell = cfg.grid_cell() * T::of(0.5);
    let angle_bounds = vec![(-half_cell, half_cell); m];
    let kappa_bounds = vec![(-params.kappa_clip, params.kappa_clip); taps];

    let mut beta = vec![T::zero(); m];
    let mut dk = vec![T::zero(); taps];
    let mut prec = Array2::from_elem((m, taps), T::one());
    // same starting point as the factorized solver: unit precisions
    let (mut c_alpha, mut d_alpha) = (T::one(), T::one());
    let mut mean = Array2::<Cx<T>>::zeros((m, taps));
    let mut diag = Diagnostics::default();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    for it in 0..params.max_iters {
        let at = &a0 + &(&b0 * &Array1::from_iter(beta.iter().map(|&b| creal::<T>(b))));
        let st = &s0 + &(&s0d * &Array1::from_iter(dk.iter().map(|&b| creal::<T>(b))));
        let alpha = c_alpha / d_alpha;
        let post = vector_posterior(&at, &st, &y, &prec.view(), alpha, params.jitter, params.memory_budget)?;
        diag.jitter_events += usize::from(post.jittered);
        if !post.mean.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("vector_ogvbi mean"));
        }
        Zip::from(&mut prec).and(&post.mean).and(&post.variance).for_each(|p, mu, v| {
            *p = (params.c + T::one()) / (params.d + mu.norm_sqr() + *v);
        });
        let resid = &y - &at.dot(&post.mean).dot(&st.t());
        c_alpha = params.c + T::of_usize(y.len());
        d_alpha = params.d + fro_sqr(&resid.view()) + post.fit_trace.max(T::zero());

        let ws = taylor_offset_system(&y, &a0.view(), &b0.view(), &post.mean.view(), &st.view(), &post.angle_xi.view());
        let (b, ridge) = solve_offsets(&ws);
        diag.angle_ridge_fallbacks += usize::from(ridge);
        let yt = y.t();
        let mt = post.mean.t();
        let wk = taylor_offset_system(&yt, &s0.view(), &s0d.view(), &mt, &at.view(), &post.doppler_xi.view());
        let (kk, ridge_k) = solve_offsets(&wk);
        diag.angle_ridge_fallbacks += usize::from(ridge_k);
        beta = b.to_vec();
        clip_offsets(&mut beta, &angle_bounds);
        dk = kk.to_vec();
        clip_offsets(&mut dk, &kappa_bounds);
        diag.refinement_passes += 1;

        let change =
            fro_sqr(&(&post.mean - &mean).view()).sqrt() / fro_sqr(&post.mean.view()).sqrt().max(T::min_positive_value());
        mean = post.mean;
        trace.push(change);
        iters = it + 1;
        if let Some(obs) = observer.as_deref_mut() {
            let h = reconstruct(&mean, &grid, &beta, &dk, cfg);
            obs(it, &h.mapv(|z| z / creal(scale)));
        }
        if change <= params.tol {
            converged = true;
            break;
        }
    }
    let theta: Vec<T> = grid.iter().zip(&beta).map(|(&t, &b)| t + b).collect();
    Ok(EstimationResult {
        h_hat: reconstruct(&mean, &grid, &beta, &dk, cfg),
        u: mean,
        theta,
        kappa: dk,
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

/// Channel from the coefficient estimate with exact steering vectors at the
/// refined angles and Doppler ramps at the refined offsets.
fn reconstruct<T: Real>(mean: &Array2<Cx<T>>, grid: &[T], beta: &[T], dk: &[T], cfg: &SystemConfig<T>) -> Array2<Cx<T>> {
    let theta: Vec<T> = grid.iter().zip(beta).map(|(&t, &b)| t + b).collect();
    let (a_ref, _) = steering_matrices(&theta, cfg);
    let mut weights = Array2::zeros((cfg.pilot_len, dk.len()));
    for (n, &k) in dk.iter().enumerate() {
        weights.column_mut(n).assign(&doppler_ramp(k, cfg.pilot_len));
    }
    let spatial = a_ref.dot(mean);
    channel_from_taps(&spatial.view(), &weights.view())
}
