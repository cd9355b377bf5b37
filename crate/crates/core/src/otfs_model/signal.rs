use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use super::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{self, PILOT_STREAM};
use crate::scalar::{cis, Cx, Real};

/// Time-domain pilot of length `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSignal<T> {
    /// Unit-modulus pilot samples.
    pub x: Array1<Cx<T>>,
    /// Delay-Doppler block the pilot was assembled from, if any.
    pub dd_block: Option<Array2<Cx<T>>>,
}

/// Unit-modulus QPSK pilot drawn from `seed`.
pub fn generate_pilot<T: Real>(cfg: &SystemConfig<T>, seed: u64) -> PilotSignal<T> {
    let mut rng = rng::stream(seed, PILOT_STREAM);
    let quarter = T::FRAC_PI_2();
    let offset = T::FRAC_PI_4();
    let x = (0..cfg.pilot_len)
        .map(|_| cis(offset + quarter * T::of_usize(rng.random_range(0..4usize))))
        .collect();
    PilotSignal { x, dd_block: None }
}

/// `X = X_DD F_Nᴴ` with the unitary `N`-point DFT (rectangular transmit pulse).
pub fn assemble_time_block<T: Real>(
    dd_block: &ArrayView2<'_, Cx<T>>,
    cfg: &SystemConfig<T>,
) -> Result<Array2<Cx<T>>> {
    let (m, n) = dd_block.dim();
    if m != cfg.subcarriers || n != cfg.frames {
        return Err(Error::Dimension(format!(
            "delay-Doppler block is {m}x{n}, expected {}x{}",
            cfg.subcarriers, cfg.frames
        )));
    }
    let scale = T::of_usize(n).sqrt().recip();
    let w = T::TAU() / T::of_usize(n);
    let idft = Array2::from_shape_fn((n, n), |(k, l)| cis(w * T::of_usize((k * l) % n)) * scale);
    Ok(dd_block.dot(&idft))
}

/// Steering vector `a(θ)` and its derivative `da/dθ`.
pub fn array_response<T: Real>(theta: T, cfg: &SystemConfig<T>) -> (Array1<Cx<T>>, Array1<Cx<T>>) {
    let k = T::TAU() / cfg.wavelength();
    let (sin, cos) = theta.sin_cos();
    let a: Array1<Cx<T>> = cfg.spacings.iter().map(|&d| cis(k * d * sin)).collect();
    let b = a
        .iter()
        .zip(cfg.spacings.iter())
        .map(|(&ar, &d)| ar * Cx::new(T::zero(), k * d * cos))
        .collect();
    (a, b)
}

/// Steering matrix `A` and derivative matrix `B` with one column per angle.
pub fn steering_matrices<T: Real>(thetas: &[T], cfg: &SystemConfig<T>) -> (Array2<Cx<T>>, Array2<Cx<T>>) {
    let mut a = Array2::zeros((cfg.antennas, thetas.len()));
    let mut b = Array2::zeros((cfg.antennas, thetas.len()));
    for (m, &th) in thetas.iter().enumerate() {
        let (am, bm) = array_response(th, cfg);
        a.column_mut(m).assign(&am);
        b.column_mut(m).assign(&bm);
    }
    (a, b)
}

/// `Πⁿ x`: `(Πⁿx)_t = x_{(t-n) mod L}`.
pub fn cyclic_shift<T: Real>(x: &ArrayView1<'_, Cx<T>>, n: usize) -> Array1<Cx<T>> {
    let l = x.len();
    if l == 0 {
        return Array1::zeros(0);
    }
    let n = n % l;
    Array1::from_shape_fn(l, |t| x[(t + l - n) % l])
}

/// Diagonal of `Δ^κ`: `e^{j2πκt/L}` for `t = 0..L-1`.
pub fn doppler_ramp<T: Real>(kappa: T, len: usize) -> Array1<Cx<T>> {
    let w = T::TAU() * kappa / T::of_usize(len);
    Array1::from_shape_fn(len, |t| cis(w * T::of_usize(t)))
}

/// `s_n(κ) = Δ^κ Πⁿ x` for tap `1 ≤ n ≤ L`.
pub fn delay_doppler_atom<T: Real>(n: usize, kappa: T, x: &ArrayView1<'_, Cx<T>>) -> Result<Array1<Cx<T>>> {
    if n == 0 || n > x.len() {
        return Err(Error::OutOfRange(format!("delay tap {n} outside 1..={}", x.len())));
    }
    let shifted = cyclic_shift(x, n);
    Ok(shifted * &doppler_ramp(kappa, x.len()))
}

/// `L × N_τ` matrix whose column `n-1` is `Πⁿ x`.
pub fn shift_matrix<T: Real>(x: &ArrayView1<'_, Cx<T>>, taps: usize) -> Array2<Cx<T>> {
    let l = x.len();
    let mut out = Array2::zeros((l, taps));
    for n in 1..=taps {
        out.column_mut(n - 1).assign(&cyclic_shift(x, n));
    }
    out
}

/// `S(κ)` with columns `s_n(κ_n)`.
pub fn atom_matrix<T: Real>(x: &ArrayView1<'_, Cx<T>>, kappa: &[T]) -> Array2<Cx<T>> {
    let l = x.len();
    let mut out = Array2::zeros((l, kappa.len()));
    for (i, &k) in kappa.iter().enumerate() {
        let ramp = doppler_ramp(k, l);
        let shifted = cyclic_shift(x, i + 1);
        out.column_mut(i).assign(&(shifted * ramp));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::fro_sqr;
    use ndarray::arr2;

    type C = Cx<f64>;

    fn small_cfg(m: usize, n: usize) -> SystemConfig<f64> {
        SystemConfig::half_wavelength_ula(m, n, 15e3, 6e9, 8, 4, 6, 3)
    }

    #[test]
    fn one_point_block_is_identity() {
        let dd = arr2(&[[C::new(1.0, 0.0)]]);
        let x = assemble_time_block(&dd.view(), &small_cfg(1, 1)).unwrap();
        assert!((x[[0, 0]] - C::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_point_block_by_hand() {
        let dd = arr2(&[[C::new(1.0, 0.0), C::new(0.0, 0.0)]]);
        let x = assemble_time_block(&dd.view(), &small_cfg(1, 2)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((x[[0, 0]] - C::new(h, 0.0)).norm() < 1e-15);
        assert!((x[[0, 1]] - C::new(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn block_dimension_mismatch() {
        let dd = Array2::<C>::zeros((2, 3));
        assert!(matches!(
            assemble_time_block(&dd.view(), &small_cfg(2, 2)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn block_preserves_energy() {
        let cfg = small_cfg(3, 5);
        let dd = Array2::from_shape_fn((3, 5), |(i, j)| C::new(i as f64 - 1.0, (j * j) as f64 * 0.1));
        let x = assemble_time_block(&dd.view(), &cfg).unwrap();
        assert!((fro_sqr(&x.view()) - fro_sqr(&dd.view())).abs() < 1e-12);
    }

    #[test]
    fn pilot_is_deterministic_unit_modulus() {
        let cfg = small_cfg(4, 4).with_pilot_len(4);
        let a = generate_pilot(&cfg, 7);
        let b = generate_pilot(&cfg, 7);
        assert_eq!(a, b);
        assert!(a.x.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        let cfg40 = SystemConfig::<f64>::reference();
        let p = generate_pilot(&cfg40, 1);
        let energy: f64 = p.x.iter().map(|z| z.norm_sqr()).sum();
        assert!((energy - 40.0).abs() < 1e-12);
        assert_ne!(generate_pilot(&cfg40, 2), p);
    }

    #[test]
    fn broadside_and_endfire_responses() {
        let cfg = SystemConfig::<f64>::reference();
        let (a, _) = array_response(0.0, &cfg);
        assert!(a.iter().all(|z| (z - C::new(1.0, 0.0)).norm() < 1e-15));
        let (a, _) = array_response(std::f64::consts::FRAC_PI_2, &cfg);
        for (r, z) in a.iter().enumerate() {
            let want = if r % 2 == 0 { 1.0 } else { -1.0 };
            assert!((z - C::new(want, 0.0)).norm() < 1e-9, "r = {r}");
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let cfg = SystemConfig::<f64>::reference();
        let h = 1e-6;
        let (_, b) = array_response(0.3, &cfg);
        let (ap, _) = array_response(0.3 + h, &cfg);
        let (am, _) = array_response(0.3 - h, &cfg);
        let fd = (ap - am).mapv(|z| z / (2.0 * h));
        let err = (&fd - &b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err / scale <= 1e-6, "relative error {}", err / scale);
    }

    #[test]
    fn atom_shift_and_ramp() {
        let x = Array1::from_shape_fn(5, |t| C::new(t as f64 + 1.0, 0.0));
        let s = delay_doppler_atom(2, 0.0, &x.view()).unwrap();
        let want = [4.0, 5.0, 1.0, 2.0, 3.0];
        for (z, w) in s.iter().zip(want) {
            assert!((z.re - w).abs() < 1e-15);
        }
        let full = delay_doppler_atom(5, 0.3, &x.view()).unwrap();
        let ramp = doppler_ramp(0.3, 5);
        for t in 0..5 {
            assert!((full[t] - x[t] * ramp[t]).norm() < 1e-15);
        }
        assert!(delay_doppler_atom(0, 0.0, &x.view()).is_err());
        assert!(delay_doppler_atom(6, 0.0, &x.view()).is_err());
    }

    #[test]
    fn atom_matrix_columns() {
        let x = Array1::from_shape_fn(6, |t| cis(0.7 * t as f64));
        let kap = [0.1, -0.4, 0.0];
        let s = atom_matrix(&x.view(), &kap);
        for (i, &k) in kap.iter().enumerate() {
            let col = delay_doppler_atom(i + 1, k, &x.view()).unwrap();
            assert!((&col - &s.column(i)).iter().all(|z| z.norm() < 1e-15));
        }
        let xs = shift_matrix(&x.view(), 3);
        assert_eq!(xs.column(2), cyclic_shift(&x.view(), 3));
    }
}
