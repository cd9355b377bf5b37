use ndarray::Array2;

use super::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::linalg::fro_sqr;
use crate::scalar::{Cx, Real};

/// `‖H - Ĥ‖²/‖H‖²` for one pair.
pub fn nmse_single<T: Real>(h_true: &Array2<Cx<T>>, h_est: &Array2<Cx<T>>) -> Result<T> {
    if h_true.dim() != h_est.dim() {
        return Err(Error::Dimension(format!("{:?} vs {:?}", h_true.dim(), h_est.dim())));
    }
    let den = fro_sqr(&h_true.view());
    if den == T::zero() {
        return Err(Error::Empty("zero-norm true channel"));
    }
    let num = h_true
        .iter()
        .zip(h_est.iter())
        .fold(T::zero(), |acc, (a, b)| acc + (a - b).norm_sqr());
    Ok(num / den)
}

/// Average normalized squared error over paired channel lists.
pub fn nmse<T: Real>(h_true: &[Array2<Cx<T>>], h_est: &[Array2<Cx<T>>]) -> Result<T> {
    if h_true.is_empty() {
        return Err(Error::Empty("channel list"));
    }
    if h_true.len() != h_est.len() {
        return Err(Error::Dimension(format!("{} true vs {} estimated channels", h_true.len(), h_est.len())));
    }
    let mut acc = T::zero();
    for (a, b) in h_true.iter().zip(h_est) {
        acc += nmse_single(a, b)?;
    }
    Ok(acc / T::of_usize(h_true.len()))
}

/// Largest phase rotations across the Doppler, angle and delay dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseAccumulations<T> {
    /// `2π ν_max L/(MΔf)` with `ν_max = f0 v/c`.
    pub doppler: T,
    /// `2π N_BS d sin(θ_max)/λ`.
    pub angle: T,
    /// `-2π f0 τ_max_tap/(MΔf)`.
    pub delay: T,
}

/// Phase accumulated over the pilot, the array aperture and the delay spread.
///
/// `d` is the element pitch `spacings[1]`, or half a wavelength for a single antenna.
pub fn phase_accumulations<T: Real>(
    cfg: &SystemConfig<T>,
    v_user: T,
    theta_max: T,
    tau_max_tap: usize,
) -> PhaseAccumulations<T> {
    let c = T::of(SPEED_OF_LIGHT);
    let nu_max = cfg.carrier_freq * v_user / c;
    let rate = cfg.sample_rate();
    let pitch = if cfg.spacings.len() > 1 {
        cfg.spacings[1] - cfg.spacings[0]
    } else {
        cfg.wavelength() * T::of(0.5)
    };
    PhaseAccumulations {
        doppler: T::TAU() * nu_max * T::of_usize(cfg.pilot_len) / rate,
        angle: T::TAU() * T::of_usize(cfg.antennas) * pitch * theta_max.sin() / cfg.wavelength(),
        delay: -T::TAU() * cfg.carrier_freq * T::of_usize(tau_max_tap) / rate,
    }
}
