use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::channel::reconstruct_channel;
use super::config::SystemConfig;
use super::signal::{doppler_ramp, shift_matrix, steering_matrices};
use crate::error::{Error, Result};
use crate::linalg::norm_sqr;
use crate::scalar::{Cx, Real};

/// Angle grid, Doppler values and the dictionaries derived from them.
#[derive(Debug, Clone)]
pub struct DictionaryState<T> {
    /// Grid angles `θ_m`.
    pub theta: Vec<T>,
    /// Off-grid offsets `β_m`.
    pub beta: Vec<T>,
    /// Per-tap Doppler `κ_n`.
    pub kappa: Vec<T>,
    /// `A(β)`, columns `a(θ_m + β_m)`.
    pub a: Array2<Cx<T>>,
    /// Derivative columns `da/dθ` at `θ_m + β_m`.
    pub b: Array2<Cx<T>>,
    /// `S(κ)`, columns `s_n(κ_n)`.
    pub s: Array2<Cx<T>>,
    /// `ε_n = s_nᴴ s_n`.
    pub eps: Vec<T>,
    /// Pilot.
    pub x: Array1<Cx<T>>,
    /// Columns `Πⁿ x`.
    pub x_shift: Array2<Cx<T>>,
    cfg: SystemConfig<T>,
}

impl<T: Real> DictionaryState<T> {
    /// Dictionary at explicit angles (zero offsets) and Doppler values.
    pub fn new(cfg: &SystemConfig<T>, x: &ArrayView1<'_, Cx<T>>, theta: Vec<T>, kappa: Vec<T>) -> Result<Self> {
        if x.len() != cfg.pilot_len {
            return Err(Error::Dimension(format!("pilot length {} vs L = {}", x.len(), cfg.pilot_len)));
        }
        if kappa.len() != cfg.delay_taps {
            return Err(Error::Dimension(format!("{} Doppler values for {} taps", kappa.len(), cfg.delay_taps)));
        }
        if theta.is_empty() {
            return Err(Error::Empty("angle grid"));
        }
        let x_shift = shift_matrix(x, cfg.delay_taps);
        let beta = vec![T::zero(); theta.len()];
        let (a, b) = steering_matrices(&theta, cfg);
        let mut dict = Self {
            theta,
            beta,
            kappa,
            a,
            b,
            s: Array2::zeros((cfg.pilot_len, cfg.delay_taps)),
            eps: vec![T::zero(); cfg.delay_taps],
            x: x.to_owned(),
            x_shift,
            cfg: cfg.clone(),
        };
        for n in 0..cfg.delay_taps {
            dict.refresh_atom(n);
        }
        Ok(dict)
    }

    /// Uniform cell-centred angle grid with all Doppler values zero.
    pub fn on_grid(cfg: &SystemConfig<T>, x: &ArrayView1<'_, Cx<T>>) -> Result<Self> {
        Self::new(cfg, x, cfg.angle_grid_points(), vec![T::zero(); cfg.delay_taps])
    }

    /// System configuration the dictionary was built for.
    pub fn config(&self) -> &SystemConfig<T> {
        &self.cfg
    }

    /// `θ_m + β_m`.
    pub fn effective_angles(&self) -> Vec<T> {
        self.theta.iter().zip(&self.beta).map(|(&t, &b)| t + b).collect()
    }

    /// Moves the grid to `theta` and resets offsets to zero.
    pub fn set_angles(&mut self, theta: Vec<T>) {
        self.theta = theta;
        self.beta = vec![T::zero(); self.theta.len()];
        self.rebuild_angles();
    }

    /// Sets the offsets and rebuilds `A(β)` and `B`.
    pub fn set_offsets(&mut self, beta: Vec<T>) {
        self.beta = beta;
        self.rebuild_angles();
    }

    fn rebuild_angles(&mut self) {
        let (a, b) = steering_matrices(&self.effective_angles(), &self.cfg);
        self.a = a;
        self.b = b;
    }

    /// Sets `κ_n` for the zero-based tap index `n` and rebuilds `s_n`.
    pub fn set_kappa(&mut self, n: usize, kappa: T) {
        self.kappa[n] = kappa;
        self.refresh_atom(n);
    }

    fn refresh_atom(&mut self, n: usize) {
        let ramp = doppler_ramp(self.kappa[n], self.cfg.pilot_len);
        let col = &self.x_shift.column(n) * &ramp;
        self.eps[n] = norm_sqr(&col.view());
        self.s.column_mut(n).assign(&col);
    }

    /// `Aᴴ A`.
    pub fn gram_a(&self) -> Array2<Cx<T>> {
        crate::linalg::matmul_hn(&self.a.view(), &self.a.view())
    }

    /// `Y - A U Sᵀ`.
    pub fn residual(&self, y: &ArrayView2<'_, Cx<T>>, u: &ArrayView2<'_, Cx<T>>) -> Array2<Cx<T>> {
        y - &self.a.dot(u).dot(&self.s.t())
    }

    /// Reconstructed channel `Σ_n (Δ^{κ_n}Πⁿ) ⊗ (A u_n)`.
    pub fn reconstruct(&self, u: &ArrayView2<'_, Cx<T>>) -> Array2<Cx<T>> {
        reconstruct_channel(&self.a.view(), u, &self.kappa, self.cfg.pilot_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::otfs_model::signal::{array_response, delay_doppler_atom, generate_pilot};

    #[test]
    fn invariants_hold() {
        let cfg = SystemConfig::<f64>::half_wavelength_ula(16, 4, 15e3, 6e9, 10, 5, 8, 4);
        let x = generate_pilot(&cfg, 4).x;
        let mut d = DictionaryState::new(&cfg, &x.view(), cfg.angle_grid_points(), vec![0.1, -0.2, 0.0, 0.35]).unwrap();
        d.set_offsets(vec![0.01; 8]);
        for m in 0..8 {
            let (am, _) = array_response(d.theta[m] + 0.01, &cfg);
            assert!((&am - &d.a.column(m)).iter().all(|z| z.norm() < 1e-14));
        }
        for n in 0..4 {
            let want = delay_doppler_atom(n + 1, d.kappa[n], &x.view()).unwrap();
            assert!((&want - &d.s.column(n)).iter().all(|z| z.norm() < 1e-14));
            assert!((d.eps[n] - 10.0).abs() < 1e-12);
            for t in 0..10 {
                assert!((d.s[[t, n]].norm() - x[(t + 10 - n - 1) % 10].norm()).abs() < 1e-14);
            }
        }
        d.set_kappa(2, 0.77);
        assert!((d.eps[2] - 10.0).abs() < 1e-12);
        d.set_angles(vec![0.0; 8]);
        assert!(d.beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn rejects_wrong_sizes() {
        let cfg = SystemConfig::<f64>::half_wavelength_ula(16, 4, 15e3, 6e9, 10, 5, 8, 4);
        let x = generate_pilot(&cfg, 4).x;
        assert!(DictionaryState::new(&cfg, &x.view(), cfg.angle_grid_points(), vec![0.0; 3]).is_err());
        let short = x.slice(ndarray::s![..9]).to_owned();
        assert!(DictionaryState::on_grid(&cfg, &short.view()).is_err());
    }
}
