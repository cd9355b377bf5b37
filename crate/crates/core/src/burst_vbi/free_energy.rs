use ndarray::ArrayView2;

use super::hyper::HyperParams;
use super::state::{PosteriorState, PriorState};
use crate::error::{Error, Result};
use crate::otfs_model::DictionaryState;
use crate::scalar::{Cx, Real};
use crate::special::{expected_ln, gamma_cross, gamma_entropy};

/// Evidence lower bound of the factorized posterior (higher is better).
///
/// Sum of the expected log joint density and the entropies of every factor.
pub fn free_energy<T: Real>(
    state: &PosteriorState<T>,
    dict: &DictionaryState<T>,
    y: &ArrayView2<'_, Cx<T>>,
    hyper: &HyperParams<T>,
) -> Result<T> {
    let (c, d) = (hyper.c, hyper.d);
    let ln_pi = T::PI().ln();
    let m = state.angle_grid();
    let n_taps = state.delay_taps();
    let count = T::of_usize(y.len());

    let e_ln_alpha = expected_ln(state.c_alpha, state.d_alpha);
    let mut total = count * (e_ln_alpha - ln_pi) - state.alpha_hat() * state.expected_sq_residual(dict, y);
    total += gamma_cross(c, d, state.c_alpha, state.d_alpha) + gamma_entropy(state.c_alpha, state.d_alpha);

    let gauss_const = T::of_usize(m) * (T::one() + ln_pi);
    for ld in &state.logdet_sigma {
        total += gauss_const + *ld;
    }

    let w = state.varpi();
    match &state.prior {
        PriorState::Hybrid(h) => {
            let e_ln_gamma: Vec<T> = (0..m).map(|k| expected_ln(h.c_gamma[k], h.d_gamma[k])).collect();
            let gamma: Vec<T> = (0..m).map(|k| h.c_gamma[k] / h.d_gamma[k]).collect();
            let e_ln_rho: Vec<T> = (0..n_taps).map(|n| expected_ln(h.c_rho[n], h.d_rho[n])).collect();
            let rho: Vec<T> = (0..n_taps).map(|n| h.c_rho[n] / h.d_rho[n]).collect();
            let sum_e_ln_rho = e_ln_rho.iter().fold(T::zero(), |a, &b| a + b);
            for row in 0..m {
                let wr = (0..n_taps).fold(T::zero(), |acc, n| acc + rho[n] * w[[row, n]]);
                for (col, u) in [-1isize, 0, 1].into_iter().enumerate() {
                    let z = h.z_hat[[row, col]];
                    if z == T::zero() {
                        continue;
                    }
                    let k = (row as isize + u).rem_euclid(m as isize) as usize;
                    let term = T::of_usize(n_taps) * (e_ln_gamma[k] - ln_pi) + sum_e_ln_rho - gamma[k] * wr;
                    total += z * term;
                    total -= z * z.ln();
                }
                total += T::of(3.0).recip().ln();
            }
            for k in 0..m {
                total += gamma_cross(c, d, h.c_gamma[k], h.d_gamma[k]) + gamma_entropy(h.c_gamma[k], h.d_gamma[k]);
            }
            for n in 0..n_taps {
                total += gamma_cross(c, d, h.c_rho[n], h.d_rho[n]) + gamma_entropy(h.c_rho[n], h.d_rho[n]);
            }
        }
        PriorState::Iid(p) => {
            for ((&a, &b), &wv) in p.c_xi.iter().zip(p.d_xi.iter()).zip(w.iter()) {
                total += expected_ln(a, b) - ln_pi - a / b * wv;
                total += gamma_cross(c, d, a, b) + gamma_entropy(a, b);
            }
        }
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("free energy"));
    }
    Ok(total)
}
