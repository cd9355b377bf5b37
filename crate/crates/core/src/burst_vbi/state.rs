use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::hyper::{HyperParams, PriorMode};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_jittered, fro_sqr, herm, inverse_from_cholesky, trace_prod_re};
use crate::otfs_model::{DictionaryState, SystemConfig};
use crate::scalar::{creal, Cx, Real};
use crate::special::expected_ln;

/// Gamma factors of the hybrid burst prior.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrior<T> {
    pub c_gamma: Array1<T>,
    pub d_gamma: Array1<T>,
    pub c_rho: Array1<T>,
    pub d_rho: Array1<T>,
    /// `M_θ × 3` assignment probabilities; columns are `u = -1, 0, +1`.
    pub z_hat: Array2<T>,
}

/// Gamma factors of the i.i.d. prior.
#[derive(Debug, Clone, PartialEq)]
pub struct IidPrior<T> {
    pub c_xi: Array2<T>,
    pub d_xi: Array2<T>,
}

/// Prior-specific part of the variational state.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorState<T> {
    Hybrid(HybridPrior<T>),
    Iid(IidPrior<T>),
}

/// Variational factors: Gaussian `q(g_n)` per tap plus the Gamma and categorical factors.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState<T> {
    /// `M_θ × N_τ`; column `n` is `μ_n`.
    pub mu: Array2<Cx<T>>,
    /// Covariances `Σ_n`.
    pub sigma: Vec<Array2<Cx<T>>>,
    /// `ln det Σ_n`.
    pub logdet_sigma: Vec<T>,
    pub c_alpha: T,
    pub d_alpha: T,
    pub prior: PriorState<T>,
    /// Covariance factorizations that needed jitter.
    pub jitter_events: usize,
}

#[inline]
fn wrap(m: usize, u: isize, len: usize) -> usize {
    (m as isize + u).rem_euclid(len as isize) as usize
}

const OFFSETS: [isize; 3] = [-1, 0, 1];

impl<T: Real> PosteriorState<T> {
    /// Unit precisions, uniform assignments, zero means and identity covariances.
    pub fn init(cfg: &SystemConfig<T>, hyper: &HyperParams<T>) -> Self {
        let (m, n) = (cfg.angle_grid, cfg.delay_taps);
        let one = T::one();
        let prior = match hyper.prior {
            PriorMode::HybridBurst => {
                let mut z_hat = Array2::from_elem((m, 3), one / T::of(3.0));
                if hyper.freeze_assignments {
                    z_hat.fill(T::zero());
                    z_hat.column_mut(1).fill(one);
                }
                PriorState::Hybrid(HybridPrior {
                    c_gamma: Array1::from_elem(m, one),
                    d_gamma: Array1::from_elem(m, one),
                    c_rho: Array1::from_elem(n, one),
                    d_rho: Array1::from_elem(n, one),
                    z_hat,
                })
            }
            PriorMode::Iid => PriorState::Iid(IidPrior {
                c_xi: Array2::from_elem((m, n), one),
                d_xi: Array2::from_elem((m, n), one),
            }),
        };
        Self {
            mu: Array2::zeros((m, n)),
            sigma: vec![Array2::from_diag_elem(m, creal(one)); n],
            logdet_sigma: vec![T::zero(); n],
            c_alpha: one,
            d_alpha: one,
            prior,
            jitter_events: 0,
        }
    }

    pub fn angle_grid(&self) -> usize {
        self.mu.nrows()
    }

    pub fn delay_taps(&self) -> usize {
        self.mu.ncols()
    }

    /// `α̂ = c_α/d_α`.
    pub fn alpha_hat(&self) -> T {
        self.c_alpha / self.d_alpha
    }

    pub fn hybrid(&self) -> Result<&HybridPrior<T>> {
        match &self.prior {
            PriorState::Hybrid(h) => Ok(h),
            PriorState::Iid(_) => Err(Error::PriorMode("hybrid factors requested in i.i.d. mode")),
        }
    }

    pub fn iid(&self) -> Result<&IidPrior<T>> {
        match &self.prior {
            PriorState::Iid(p) => Ok(p),
            PriorState::Hybrid(_) => Err(Error::PriorMode("i.i.d. factors requested in hybrid mode")),
        }
    }

    fn hybrid_mut(&mut self) -> Result<&mut HybridPrior<T>> {
        match &mut self.prior {
            PriorState::Hybrid(h) => Ok(h),
            PriorState::Iid(_) => Err(Error::PriorMode("hybrid update in i.i.d. mode")),
        }
    }

    fn iid_mut(&mut self) -> Result<&mut IidPrior<T>> {
        match &mut self.prior {
            PriorState::Iid(p) => Ok(p),
            PriorState::Hybrid(_) => Err(Error::PriorMode("i.i.d. update in hybrid mode")),
        }
    }

    /// Second moments `ϖ_{m,n} = |μ_{m,n}|² + [Σ_n]_{m,m}`.
    pub fn varpi(&self) -> Array2<T> {
        let mut w = self.mu.mapv(|z| z.norm_sqr());
        for (n, sig) in self.sigma.iter().enumerate() {
            for m in 0..w.nrows() {
                w[[m, n]] += sig[[m, m]].re;
            }
        }
        w
    }

    /// Diagonal of `Υ`: `Υ_m = Σ_u ẑ_{m,u} γ̂_{m+u}` with circular wrap.
    pub fn effective_prior_precision(&self) -> Result<Array1<T>> {
        let h = self.hybrid()?;
        let gamma = &h.c_gamma / &h.d_gamma;
        let len = gamma.len();
        Ok(Array1::from_shape_fn(len, |m| {
            OFFSETS
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (k, &u)| acc + h.z_hat[[m, k]] * gamma[wrap(m, u, len)])
        }))
    }

    /// Prior precision of every coefficient, `M_θ × N_τ`: `ρ̂_n Υ_m` or `ξ̂_{m,n}`.
    pub fn coefficient_precisions(&self) -> Result<Array2<T>> {
        match &self.prior {
            PriorState::Hybrid(h) => {
                let ups = self.effective_prior_precision()?;
                let rho = &h.c_rho / &h.d_rho;
                Ok(Array2::from_shape_fn((ups.len(), rho.len()), |(m, n)| ups[m] * rho[n]))
            }
            PriorState::Iid(p) => Ok(&p.c_xi / &p.d_xi),
        }
    }

    /// Sequential update of every `q(g_n)` in ascending `n` using the freshest residual.
    pub fn update_g_factors(
        &mut self,
        dict: &DictionaryState<T>,
        y: &ArrayView2<'_, Cx<T>>,
        hyper: &HyperParams<T>,
    ) -> Result<()> {
        let prec = self.coefficient_precisions()?;
        let alpha = self.alpha_hat();
        self.update_g_factors_with(dict, y, &prec.view(), alpha, hyper.jitter)
    }

    /// [`update_g_factors`](Self::update_g_factors) with explicit coefficient
    /// precisions and noise precision.
    pub fn update_g_factors_with(
        &mut self,
        dict: &DictionaryState<T>,
        y: &ArrayView2<'_, Cx<T>>,
        prec: &ArrayView2<'_, T>,
        alpha: T,
        jitter: T,
    ) -> Result<()> {
        if y.dim() != (dict.a.nrows(), dict.s.nrows()) {
            return Err(Error::Dimension(format!(
                "observation {:?} vs {}x{}",
                y.dim(),
                dict.a.nrows(),
                dict.s.nrows()
            )));
        }
        if !y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        let m = self.angle_grid();
        let gram = dict.gram_a();
        let ah = herm(&dict.a.view());
        let mut resid = dict.residual(y, &self.mu.view());
        for n in 0..self.delay_taps() {
            let eps = dict.eps[n];
            let s_conj = dict.s.column(n).mapv(|z| z.conj());
            let mu_old = self.mu.column(n).to_owned();
            let rs = resid.dot(&s_conj);
            let back = gram.dot(&mu_old).mapv(|z| z * eps);
            let q = ah.dot(&rs) + back;
            let scale = alpha * eps;
            let mut lam = gram.mapv(|z| z * scale);
            for i in 0..m {
                lam[[i, i]] += creal(prec[[i, n]]);
            }
            let (l, attempts) = cholesky_jittered(&lam.view(), jitter)?;
            if attempts > 0 {
                self.jitter_events += 1;
            }
            let (sig, logdet_lam) = inverse_from_cholesky(&l.view());
            let mu_new = sig.dot(&q).mapv(|z| z * alpha);
            if !mu_new.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite("posterior mean"));
            }
            let delta = dict.a.dot(&(&mu_new - &mu_old));
            let s_n = dict.s.column(n);
            for (r, &dr) in delta.iter().enumerate() {
                let mut row = resid.row_mut(r);
                for (t, &st) in s_n.iter().enumerate() {
                    row[t] -= dr * st;
                }
            }
            self.mu.column_mut(n).assign(&mu_new);
            self.sigma[n] = sig;
            self.logdet_sigma[n] = -logdet_lam;
        }
        Ok(())
    }

    /// `c_γ = c + N_τ Σ_u ẑ_{m-u,u}`, `d_γ = d + Σ_n ρ̂_n Σ_u ẑ_{m-u,u} ϖ_{m-u,n}`.
    pub fn update_hyper_gamma(&mut self, hyper: &HyperParams<T>) -> Result<()> {
        let w = self.varpi();
        let taps = T::of_usize(self.delay_taps());
        let h = self.hybrid_mut()?;
        let rho = &h.c_rho / &h.d_rho;
        let weighted = w.dot(&rho);
        let len = weighted.len();
        for k in 0..len {
            let mut zsum = T::zero();
            let mut dsum = T::zero();
            for (col, &u) in OFFSETS.iter().enumerate() {
                let src = wrap(k, -u, len);
                zsum += h.z_hat[[src, col]];
                dsum += h.z_hat[[src, col]] * weighted[src];
            }
            h.c_gamma[k] = hyper.c + taps * zsum;
            h.d_gamma[k] = hyper.d + dsum;
        }
        Ok(())
    }

    /// `c_ρ = c + Σ_{m,u} ẑ_{m,u}`, `d_ρ_n = d + Σ_m Υ_m ϖ_{m,n}`.
    pub fn update_hyper_rho(&mut self, hyper: &HyperParams<T>) -> Result<()> {
        let w = self.varpi();
        let ups = self.effective_prior_precision()?;
        let h = self.hybrid_mut()?;
        let zsum = h.z_hat.sum();
        let d = w.t().dot(&ups);
        for n in 0..h.c_rho.len() {
            h.c_rho[n] = hyper.c + zsum;
            h.d_rho[n] = hyper.d + d[n];
        }
        Ok(())
    }

    /// `Σ_n ε_n tr(AᴴA Σ_n)`.
    pub fn covariance_fit(&self, dict: &DictionaryState<T>) -> T {
        let gram = dict.gram_a();
        self.sigma
            .iter()
            .zip(&dict.eps)
            .fold(T::zero(), |acc, (sig, &e)| acc + e * trace_prod_re(&gram.view(), &sig.view()))
    }

    /// `E‖Y - A G Sᵀ‖²` under the current factors.
    pub fn expected_sq_residual(&self, dict: &DictionaryState<T>, y: &ArrayView2<'_, Cx<T>>) -> T {
        let r = dict.residual(y, &self.mu.view());
        fro_sqr(&r.view()) + self.covariance_fit(dict)
    }

    /// `c_α = c + N_BS L`, `d_α = d + E‖Y - A G Sᵀ‖²`.
    pub fn update_noise_precision(
        &mut self,
        dict: &DictionaryState<T>,
        y: &ArrayView2<'_, Cx<T>>,
        hyper: &HyperParams<T>,
    ) -> Result<()> {
        let e = self.expected_sq_residual(dict, y);
        if !e.is_finite() {
            return Err(Error::NonFinite("expected residual"));
        }
        self.c_alpha = hyper.c + T::of_usize(y.len());
        self.d_alpha = hyper.d + e;
        Ok(())
    }

    /// Softmax of `φ_{m,u} = N_τ E[ln γ_{m+u}] - γ̂_{m+u} Σ_n ρ̂_n ϖ_{m,n}` over `u`.
    pub fn update_assignments(&mut self, _hyper: &HyperParams<T>) -> Result<()> {
        let w = self.varpi();
        let taps = T::of_usize(self.delay_taps());
        let h = self.hybrid_mut()?;
        let rho = &h.c_rho / &h.d_rho;
        let weighted = w.dot(&rho);
        let len = weighted.len();
        let eln: Vec<T> = (0..len).map(|k| expected_ln(h.c_gamma[k], h.d_gamma[k])).collect();
        let gamma: Vec<T> = (0..len).map(|k| h.c_gamma[k] / h.d_gamma[k]).collect();
        for m in 0..len {
            let mut phi = [T::zero(); 3];
            for (col, &u) in OFFSETS.iter().enumerate() {
                let k = wrap(m, u, len);
                phi[col] = taps * eln[k] - gamma[k] * weighted[m];
            }
            let top = phi.iter().cloned().fold(T::neg_infinity(), T::max);
            let ex: Vec<T> = phi.iter().map(|&p| (p - top).exp()).collect();
            let total = ex.iter().fold(T::zero(), |a, &b| a + b);
            for col in 0..3 {
                h.z_hat[[m, col]] = ex[col] / total;
            }
        }
        Ok(())
    }

    /// `c_ξ = c + 1`, `d_ξ = d + ϖ` elementwise.
    pub fn update_iid_precisions(&mut self, hyper: &HyperParams<T>) -> Result<()> {
        let w = self.varpi();
        let p = self.iid_mut()?;
        p.c_xi.fill(hyper.c + T::one());
        p.d_xi.assign(&w.mapv(|v| hyper.d + v));
        Ok(())
    }

    /// Row sums of the assignment table (all ones for a valid state).
    pub fn assignment_row_sums(&self) -> Result<Array1<T>> {
        Ok(self.hybrid()?.z_hat.sum_axis(Axis(1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::otfs_model::generate_pilot;
    use ndarray::arr1;

    fn tiny_cfg(m: usize, n: usize) -> SystemConfig<f64> {
        SystemConfig::half_wavelength_ula(16, 4, 15e3, 6e9, 8.max(n), 4, m, n)
    }

    fn with_gamma(state: &mut PosteriorState<f64>, gamma: &[f64]) {
        if let PriorState::Hybrid(h) = &mut state.prior {
            h.c_gamma = arr1(gamma);
            h.d_gamma = Array1::ones(gamma.len());
        }
    }

    fn set_z(state: &mut PosteriorState<f64>, rows: &[[f64; 3]]) {
        if let PriorState::Hybrid(h) = &mut state.prior {
            for (m, r) in rows.iter().enumerate() {
                for k in 0..3 {
                    h.z_hat[[m, k]] = r[k];
                }
            }
        }
    }

    #[test]
    fn init_values() {
        let cfg = tiny_cfg(5, 3);
        let hp = HyperParams::default();
        let s = PosteriorState::init(&cfg, &hp);
        let h = s.hybrid().unwrap();
        assert!((&h.c_gamma / &h.d_gamma).iter().all(|&g| g == 1.0));
        assert!((&h.c_rho / &h.d_rho).iter().all(|&g| g == 1.0));
        assert!(h.z_hat.iter().all(|&z| (z - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(s.alpha_hat(), 1.0);
        assert_eq!(s, PosteriorState::init(&cfg, &hp));
        assert!(s.iid().is_err());
    }

    #[test]
    fn upsilon_cases() {
        let cfg = tiny_cfg(3, 1);
        let mut s = PosteriorState::init(&cfg, &HyperParams::default());
        with_gamma(&mut s, &[1.0, 2.0, 3.0]);
        set_z(&mut s, &[[0.0, 1.0, 0.0]; 3]);
        assert_eq!(s.effective_prior_precision().unwrap(), arr1(&[1.0, 2.0, 3.0]));
        set_z(&mut s, &[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.5, 0.0]]);
        let ups = s.effective_prior_precision().unwrap();
        assert_eq!(ups[0], 3.0);
        assert_eq!(ups[1], 3.0);
        assert_eq!(ups[2], 2.5);
        with_gamma(&mut s, &[4.0, 4.0, 4.0]);
        assert!(s.effective_prior_precision().unwrap().iter().all(|&v| (v - 4.0).abs() < 1e-15));
    }

    #[test]
    fn gamma_update_by_hand() {
        // M=3, N=1, ρ̂=2, ϖ = (1, 2, 3), z rows crafted
        let cfg = tiny_cfg(3, 1);
        let hp = HyperParams::default();
        let mut s = PosteriorState::init(&cfg, &hp);
        s.mu = Array2::from_shape_vec((3, 1), vec![creal(1.0), creal(2f64.sqrt()), creal(3f64.sqrt())]).unwrap();
        s.sigma = vec![Array2::zeros((3, 3))];
        if let PriorState::Hybrid(h) = &mut s.prior {
            h.c_rho[0] = 2.0;
        }
        set_z(&mut s, &[[0.2, 0.5, 0.3], [0.0, 1.0, 0.0], [0.6, 0.1, 0.3]]);
        s.update_hyper_gamma(&hp).unwrap();
        let h = s.hybrid().unwrap();
        // k=0: z[1,-1]=0, z[0,0]=0.5, z[2,+1]=0.3 -> sums 0.8 and 2*(0 + 0.5*1 + 0.3*3) = 2.8
        // k=1: z[2,-1]=0.6, z[1,0]=1.0, z[0,+1]=0.3 -> 1.9 and 2*(0.6*3 + 2 + 0.3*1) = 8.2
        // k=2: z[0,-1]=0.2, z[2,0]=0.1, z[1,+1]=0.0 -> 0.3 and 2*(0.2*1 + 0.1*3) = 1.0
        let want_c = [0.8, 1.9, 0.3];
        let want_d = [2.8, 8.2, 1.0];
        for k in 0..3 {
            assert!((h.c_gamma[k] - (1e-3 + want_c[k])).abs() < 1e-12);
            assert!((h.d_gamma[k] - (1e-3 + want_d[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_update_special_cases() {
        let cfg = tiny_cfg(4, 3);
        let hp = HyperParams::default();
        let mut s = PosteriorState::init(&cfg, &hp);
        set_z(&mut s, &[[0.0, 1.0, 0.0]; 4]);
        s.sigma = vec![Array2::zeros((4, 4)); 3];
        s.update_hyper_gamma(&hp).unwrap();
        let h = s.hybrid().unwrap();
        for k in 0..4 {
            assert!((h.c_gamma[k] - (1e-3 + 3.0)).abs() < 1e-12);
            assert_eq!(h.d_gamma[k], 1e-3);
            assert!((h.c_gamma[k] / h.d_gamma[k] - 3.001 / 1e-3).abs() < 1e-6);
        }
    }

    #[test]
    fn rho_update_by_hand() {
        let cfg = tiny_cfg(3, 1);
        let hp = HyperParams::default();
        let mut s = PosteriorState::init(&cfg, &hp);
        with_gamma(&mut s, &[1.0, 2.0, 3.0]);
        set_z(&mut s, &[[1.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]]);
        s.mu = Array2::from_shape_vec((3, 1), vec![creal(1.0), creal(1.0), creal(2.0)]).unwrap();
        s.sigma = vec![Array2::from_diag_elem(3, creal(0.5))];
        s.update_hyper_rho(&hp).unwrap();
        // Υ = (γ3, 0.5γ2 + 0.5γ3, γ1) = (3, 2.5, 1); ϖ = (1.5, 1.5, 4.5)
        let want = 3.0 * 1.5 + 2.5 * 1.5 + 1.0 * 4.5;
        let h = s.hybrid().unwrap();
        assert!((h.d_rho[0] - (1e-3 + want)).abs() < 1e-12);
        assert!((h.c_rho[0] - (1e-3 + 3.0)).abs() < 1e-12);
        let mut zero = PosteriorState::init(&cfg, &hp);
        zero.sigma = vec![Array2::zeros((3, 3))];
        zero.update_hyper_rho(&hp).unwrap();
        assert_eq!(zero.hybrid().unwrap().d_rho[0], 1e-3);
    }

    #[test]
    fn assignments_softmax_by_hand() {
        let cfg = tiny_cfg(3, 1);
        let hp = HyperParams::default();
        let mut s = PosteriorState::init(&cfg, &hp);
        s.sigma = vec![Array2::zeros((3, 3))];
        // E[ln γ] = ψ(c) - ln d: pick d so that E[ln γ] = (0, 1, 0)
        if let PriorState::Hybrid(h) = &mut s.prior {
            for k in 0..3 {
                h.c_gamma[k] = 2.0;
                let target = if k == 1 { 1.0 } else { 0.0 };
                h.d_gamma[k] = (crate::special::digamma(2.0f64) - target).exp();
            }
        }
        s.update_assignments(&hp).unwrap();
        let z = &s.hybrid().unwrap().z_hat;
        let big = std::f64::consts::E / (std::f64::consts::E + 2.0);
        let small = 1.0 / (std::f64::consts::E + 2.0);
        // row 0 favours u=+1, row 1 favours u=0, row 2 favours u=-1
        let want = [[small, small, big], [small, big, small], [big, small, small]];
        for m in 0..3 {
            for k in 0..3 {
                assert!((z[[m, k]] - want[m][k]).abs() < 1e-12);
            }
        }
        assert!((big - 0.5761).abs() < 1e-4 && (small - 0.2119).abs() < 1e-4);
    }

    #[test]
    fn symmetric_scores_give_uniform_assignments() {
        let cfg = tiny_cfg(6, 2);
        let hp = HyperParams::default();
        let mut s = PosteriorState::init(&cfg, &hp);
        s.mu.fill(creal(0.5));
        s.update_assignments(&hp).unwrap();
        let z = &s.hybrid().unwrap().z_hat;
        assert!(z.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-14));
    }

    #[test]
    fn iid_updates() {
        let cfg = tiny_cfg(2, 2);
        let hp = HyperParams::<f64>::iid();
        let mut s = PosteriorState::init(&cfg, &hp);
        s.sigma = vec![Array2::zeros((2, 2)); 2];
        s.mu[[0, 1]] = creal(1.0);
        s.mu[[1, 1]] = creal(2.0);
        s.update_iid_precisions(&hp).unwrap();
        let p = s.iid().unwrap();
        let xi = &p.c_xi / &p.d_xi;
        assert!((xi[[0, 0]] - 1.001 / 1e-3).abs() < 1e-9);
        assert!((xi[[0, 1]] - 1.0).abs() < 1e-12);
        assert!(xi[[1, 1]] < xi[[0, 1]]);
        assert!(s.update_hyper_gamma(&hp).is_err());
        assert!(s.update_assignments(&hp).is_err());
        let mut h = PosteriorState::init(&cfg, &HyperParams::default());
        assert!(h.update_iid_precisions(&hp).is_err());
    }

    #[test]
    fn noise_precision_cases() {
        let cfg = tiny_cfg(4, 2);
        let hp = HyperParams::default();
        let x = generate_pilot(&cfg, 1).x;
        let dict = DictionaryState::on_grid(&cfg, &x.view()).unwrap();
        let y = Array2::from_shape_fn((4, 8), |(r, t)| Cx::new(r as f64 * 0.1, t as f64 * -0.2));
        let mut s = PosteriorState::init(&cfg, &hp);
        s.sigma = vec![Array2::zeros((4, 4)); 2];
        s.update_noise_precision(&dict, &y.view(), &hp).unwrap();
        assert!((s.c_alpha - (1e-3 + 32.0)).abs() < 1e-12);
        assert!((s.d_alpha - (1e-3 + fro_sqr(&y.view()))).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_diagonal_case() {
        // M_θ=2 with N_BS=2 half-wavelength array at ±30° gives orthogonal columns of norm √2
        let cfg = SystemConfig::half_wavelength_ula(16, 4, 15e3, 6e9, 2, 2, 2, 1);
        let x = Array1::from_elem(2, creal(1.0));
        let th = vec![-(30f64.to_radians()), 30f64.to_radians()];
        let mut dict = DictionaryState::new(&cfg, &x.view(), th, vec![0.0]).unwrap();
        dict.a.mapv_inplace(|z| z / 2f64.sqrt());
        let g = dict.gram_a();
        assert!((g[[0, 1]]).norm() < 1e-12 && (g[[0, 0]].re - 1.0).abs() < 1e-12);
        let mut s = PosteriorState::init(&cfg, &HyperParams::<f64>::iid());
        let prec = Array2::ones((2, 1));
        // α ε = 1 with ε = 2
        s.update_g_factors_with(&dict, &Array2::zeros((2, 2)).view(), &prec.view(), 0.5, 1e-10).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert!((s.sigma[0][[i, j]] - creal(want)).norm() < 1e-12);
            }
        }
    }
}
