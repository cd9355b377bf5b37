use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::SystemConfig;
use super::signal::{array_response, delay_doppler_atom, doppler_ramp};
use crate::error::{Error, Result};
use crate::rng::{self, CHANNEL_STREAM, NOISE_STREAM};
use crate::scalar::{Cx, Real};

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent<T> {
    /// Complex gain `ħ_p`.
    pub gain: Cx<T>,
    /// Angle of arrival in radians.
    pub aoa: T,
    /// Integer delay tap in `1..=N_τ`.
    pub delay_tap: usize,
    /// Doppler in ramp units κ.
    pub doppler: T,
}

/// Ground-truth channel as a list of paths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelRealization<T> {
    pub paths: Vec<PathComponent<T>>,
}

/// Clustered scattering geometry used to draw random channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    pub clusters: usize,
    pub subpaths: usize,
    /// Half-width of the angular spread around each cluster centre, degrees.
    pub spread_deg: f64,
    /// Range of cluster centres, degrees.
    pub center_range_deg: (f64, f64),
    /// Inclusive range of delay taps.
    pub delay_range: (usize, usize),
    /// Largest absolute Doppler in Hz; each path is uniform in `[-max, max]`.
    pub doppler_max_hz: f64,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        Self {
            clusters: 2,
            subpaths: 10,
            spread_deg: 3.0,
            center_range_deg: (-60.0, 60.0),
            delay_range: (1, 20),
            doppler_max_hz: 2000.0,
        }
    }
}

impl ClusterSpec {
    /// Checks the geometry against the system grids.
    pub fn validate<T: Real>(&self, cfg: &SystemConfig<T>) -> Result<()> {
        if self.clusters == 0 || self.subpaths == 0 {
            return Err(Error::Config("cluster and sub-path counts must be positive".into()));
        }
        let (lo, hi) = self.delay_range;
        if lo == 0 || lo > hi || hi > cfg.delay_taps {
            return Err(Error::Config(format!(
                "delay range {lo}..={hi} outside the delay grid 1..={}",
                cfg.delay_taps
            )));
        }
        let (clo, chi) = self.center_range_deg;
        let spread_ok = self.spread_deg >= 0.0 && self.spread_deg.is_finite();
        if !spread_ok || !(clo <= chi) || clo - self.spread_deg < -90.0 || chi + self.spread_deg > 90.0 {
            return Err(Error::Config("cluster angles leave [-90°, 90°]".into()));
        }
        if !(self.doppler_max_hz >= 0.0) || !self.doppler_max_hz.is_finite() {
            return Err(Error::Config("Doppler range must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Total number of paths.
    pub fn path_count(&self) -> usize {
        self.clusters * self.subpaths
    }
}

fn complex_normal<T: Real, R: Rng>(rng: &mut R, var: T) -> Cx<T> {
    let s = (var * T::of(0.5)).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cx::new(T::of(re) * s, T::of(im) * s)
}

/// Draws a clustered channel; path gains are `CN(0, 1/P)` for `P` paths.
pub fn draw_cluster_channel<T: Real>(
    cfg: &SystemConfig<T>,
    spec: &ClusterSpec,
    seed: u64,
) -> Result<ChannelRealization<T>> {
    spec.validate(cfg)?;
    let mut rng = rng::stream(seed, CHANNEL_STREAM);
    let var = T::one() / T::of_usize(spec.path_count());
    let mut paths = Vec::with_capacity(spec.path_count());
    for _ in 0..spec.clusters {
        let (clo, chi) = spec.center_range_deg;
        let center = clo + (chi - clo) * rng.random::<f64>();
        for _ in 0..spec.subpaths {
            let aoa_deg = center + spec.spread_deg * (2.0 * rng.random::<f64>() - 1.0);
            let tap = rng.random_range(spec.delay_range.0..=spec.delay_range.1);
            let hz = spec.doppler_max_hz * (2.0 * rng.random::<f64>() - 1.0);
            let gain = complex_normal(&mut rng, var);
            paths.push(PathComponent {
                gain,
                aoa: T::of(aoa_deg.to_radians()),
                delay_tap: tap,
                doppler: cfg.kappa_from_hz(T::of(hz)),
            });
        }
    }
    Ok(ChannelRealization { paths })
}

/// Paths at the given angles (degrees) with `CN(0, 1/P)` gains, delay taps
/// uniform on `delay_range` and Dopplers uniform on `±doppler_max_hz`.
pub fn draw_paths_at_angles<T: Real>(
    cfg: &SystemConfig<T>,
    aoas_deg: &[f64],
    delay_range: (usize, usize),
    doppler_max_hz: f64,
    seed: u64,
) -> Result<ChannelRealization<T>> {
    let (lo, hi) = delay_range;
    if aoas_deg.is_empty() {
        return Err(Error::Config("path list is empty".into()));
    }
    if lo == 0 || lo > hi || hi > cfg.delay_taps {
        return Err(Error::Config(format!("delay range {lo}..={hi} outside the delay grid 1..={}", cfg.delay_taps)));
    }
    if aoas_deg.iter().any(|a| !(a.abs() <= 90.0)) || !(doppler_max_hz >= 0.0) || !doppler_max_hz.is_finite() {
        return Err(Error::Config("path angles must lie in [-90°, 90°] and the Doppler range must be finite".into()));
    }
    let mut rng = rng::stream(seed, CHANNEL_STREAM);
    let var = T::one() / T::of_usize(aoas_deg.len());
    let paths = aoas_deg
        .iter()
        .map(|&deg| {
            let tap = rng.random_range(lo..=hi);
            let hz = doppler_max_hz * (2.0 * rng.random::<f64>() - 1.0);
            let gain = complex_normal(&mut rng, var);
            PathComponent { gain, aoa: T::of(deg.to_radians()), delay_tap: tap, doppler: cfg.kappa_from_hz(T::of(hz)) }
        })
        .collect();
    Ok(ChannelRealization { paths })
}

impl<T: Real> ChannelRealization<T> {
    /// Checks taps against the delay grid, angles against `[-π/2, π/2]`, finite gains.
    pub fn validate(&self, cfg: &SystemConfig<T>) -> Result<()> {
        for (i, p) in self.paths.iter().enumerate() {
            if p.delay_tap == 0 || p.delay_tap > cfg.delay_taps {
                return Err(Error::OutOfRange(format!("path {i} delay tap {}", p.delay_tap)));
            }
            if !(p.aoa.abs() <= T::FRAC_PI_2()) {
                return Err(Error::OutOfRange(format!("path {i} angle {}", p.aoa)));
            }
            if !(p.gain.re.is_finite() && p.gain.im.is_finite() && p.doppler.is_finite()) {
                return Err(Error::NonFinite("path parameters"));
            }
        }
        Ok(())
    }

    /// Doppler of the strongest path in each tap `1..=taps`; zero for empty taps.
    pub fn tap_dopplers(&self, taps: usize) -> Vec<T> {
        let mut best = vec![(T::zero(), T::zero()); taps];
        for p in &self.paths {
            if (1..=taps).contains(&p.delay_tap) {
                let slot = &mut best[p.delay_tap - 1];
                if p.gain.norm_sqr() > slot.0 {
                    *slot = (p.gain.norm_sqr(), p.doppler);
                }
            }
        }
        best.into_iter().map(|(_, k)| k).collect()
    }
}

/// Received pilot block.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock<T> {
    /// `N_BS × L` observations.
    pub y: Array2<Cx<T>>,
    /// Noise variance per complex entry.
    pub sigma2: T,
    /// Nominal SNR in dB, when the noise was set from one.
    pub snr_db: Option<T>,
}

/// Noise-free `Σ_p ħ_p a(ϑ_p) s(κ_p, l_p)ᵀ`.
pub fn noiseless_received<T: Real>(
    channel: &ChannelRealization<T>,
    x: &ArrayView1<'_, Cx<T>>,
    cfg: &SystemConfig<T>,
) -> Result<Array2<Cx<T>>> {
    if x.len() != cfg.pilot_len {
        return Err(Error::Dimension(format!("pilot length {} vs L = {}", x.len(), cfg.pilot_len)));
    }
    let mut y = Array2::zeros((cfg.antennas, cfg.pilot_len));
    for p in &channel.paths {
        let (a, _) = array_response(p.aoa, cfg);
        let s = delay_doppler_atom(p.delay_tap, p.doppler, x)?;
        for (r, &ar) in a.iter().enumerate() {
            let g = p.gain * ar;
            for (t, &st) in s.iter().enumerate() {
                y[[r, t]] += g * st;
            }
        }
    }
    Ok(y)
}

/// Adds `CN(0, sigma2)` noise drawn from `seed`.
pub fn add_noise<T: Real>(y0: &ArrayView2<'_, Cx<T>>, sigma2: T, seed: u64) -> Array2<Cx<T>> {
    let mut rng = rng::stream(seed, NOISE_STREAM);
    let mut y = y0.to_owned();
    if sigma2 > T::zero() {
        for v in y.iter_mut() {
            *v += complex_normal(&mut rng, sigma2);
        }
    }
    y
}

/// `Y = Σ_p ħ_p a(ϑ_p) s(κ_p, l_p)ᵀ + W` with `W ~ CN(0, sigma2)` entrywise.
pub fn synthesize_received<T: Real>(
    channel: &ChannelRealization<T>,
    x: &ArrayView1<'_, Cx<T>>,
    sigma2: T,
    seed: u64,
    cfg: &SystemConfig<T>,
) -> Result<ReceivedBlock<T>> {
    let y0 = noiseless_received(channel, x, cfg)?;
    Ok(ReceivedBlock { y: add_noise(&y0.view(), sigma2, seed), sigma2, snr_db: None })
}

/// Noise variance giving `snr_db` relative to the mean per-entry power of `y0`.
pub fn sigma2_for_snr<T: Real>(y0: &ArrayView2<'_, Cx<T>>, snr_db: T) -> T {
    let n = T::of_usize(y0.len().max(1));
    let power = y0.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()) / n;
    power / T::of(10.0).powf(snr_db / T::of(10.0))
}

/// Like [`synthesize_received`] with the noise level set from an SNR in dB.
pub fn synthesize_received_snr<T: Real>(
    channel: &ChannelRealization<T>,
    x: &ArrayView1<'_, Cx<T>>,
    snr_db: T,
    seed: u64,
    cfg: &SystemConfig<T>,
) -> Result<ReceivedBlock<T>> {
    let y0 = noiseless_received(channel, x, cfg)?;
    let sigma2 = sigma2_for_snr(&y0.view(), snr_db);
    Ok(ReceivedBlock { y: add_noise(&y0.view(), sigma2, seed), sigma2, snr_db: Some(snr_db) })
}

/// `H = Σ_p ħ_p (Δ^{k_p} Π^{l_p}) ⊗ a(ϑ_p)`, size `L·N_BS × L`.
pub fn full_channel_matrix<T: Real>(channel: &ChannelRealization<T>, cfg: &SystemConfig<T>) -> Array2<Cx<T>> {
    let l = cfg.pilot_len;
    let nb = cfg.antennas;
    let mut h = Array2::zeros((l * nb, l));
    for p in &channel.paths {
        let (a, _) = array_response(p.aoa, cfg);
        let ramp = doppler_ramp(p.doppler, l);
        for tp in 0..l {
            let t = (tp + p.delay_tap) % l;
            let g = p.gain * ramp[t];
            for r in 0..nb {
                h[[t * nb + r, tp]] += g * a[r];
            }
        }
    }
    h
}

/// Channel matrix from per-tap spatial responses and per-tap sample weights:
/// `Σ_n diag(w_n) Πⁿ ⊗ h_n` with `h_n` column `n-1` of `spatial` (`N_BS × N_τ`)
/// and `w_n` column `n-1` of `weights` (`L × N_τ`).
pub fn channel_from_taps<T: Real>(
    spatial: &ArrayView2<'_, Cx<T>>,
    weights: &ArrayView2<'_, Cx<T>>,
) -> Array2<Cx<T>> {
    let (nb, taps) = spatial.dim();
    let l = weights.nrows();
    let mut h = Array2::zeros((l * nb, l));
    for n in 1..=taps {
        let hn = spatial.column(n - 1);
        let wn = weights.column(n - 1);
        for tp in 0..l {
            let t = (tp + n) % l;
            let g = wn[t];
            for r in 0..nb {
                h[[t * nb + r, tp]] += g * hn[r];
            }
        }
    }
    h
}

/// `Ĥ = Σ_n (Δ^{κ_n} Πⁿ) ⊗ (A u_n)`.
pub fn reconstruct_channel<T: Real>(
    dictionary: &ArrayView2<'_, Cx<T>>,
    u: &ArrayView2<'_, Cx<T>>,
    kappa: &[T],
    pilot_len: usize,
) -> Array2<Cx<T>> {
    let spatial = dictionary.dot(u);
    let mut weights = Array2::zeros((pilot_len, kappa.len()));
    for (n, &k) in kappa.iter().enumerate() {
        weights.column_mut(n).assign(&doppler_ramp(k, pilot_len));
    }
    channel_from_taps(&spatial.view(), &weights.view())
}

/// `vec` of a channel matrix applied to the pilot, reshaped to `N_BS × L`.
pub fn apply_channel<T: Real>(h: &ArrayView2<'_, Cx<T>>, x: &ArrayView1<'_, Cx<T>>, antennas: usize) -> Array2<Cx<T>> {
    let v: Array1<Cx<T>> = h.dot(x);
    let l = x.len();
    Array2::from_shape_fn((antennas, l), |(r, t)| v[t * antennas + r])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::otfs_model::signal::generate_pilot;

    type C = Cx<f64>;

    fn cfg() -> SystemConfig<f64> {
        SystemConfig::half_wavelength_ula(16, 4, 15e3, 6e9, 12, 6, 10, 5)
    }

    fn path(gain: C, deg: f64, tap: usize, k: f64) -> PathComponent<f64> {
        PathComponent { gain, aoa: deg.to_radians(), delay_tap: tap, doppler: k }
    }

    #[test]
    fn default_spec_draws_twenty_paths_in_range() {
        let cfg = SystemConfig::<f64>::reference();
        let spec = ClusterSpec::default();
        let ch = draw_cluster_channel(&cfg, &spec, 3).unwrap();
        assert_eq!(ch.paths.len(), 20);
        ch.validate(&cfg).unwrap();
        for cluster in ch.paths.chunks(10) {
            let degs: Vec<f64> = cluster.iter().map(|p| p.aoa.to_degrees()).collect();
            let lo = degs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = degs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(hi - lo <= 6.0);
        }
        let kmax = cfg.kappa_from_hz(2000.0);
        assert!(ch.paths.iter().all(|p| (1..=20).contains(&p.delay_tap) && p.doppler.abs() <= kmax));
        assert_eq!(draw_cluster_channel(&cfg, &spec, 3).unwrap(), ch);
    }

    #[test]
    fn inconsistent_spec_is_rejected() {
        let cfg = SystemConfig::<f64>::reference();
        let spec = ClusterSpec { delay_range: (1, 30), ..ClusterSpec::default() };
        assert!(draw_cluster_channel(&cfg, &spec, 0).is_err());
        let spec = ClusterSpec { center_range_deg: (-89.0, 0.0), ..ClusterSpec::default() };
        assert!(draw_cluster_channel(&cfg, &spec, 0).is_err());
    }

    #[test]
    fn single_noiseless_path_is_rank_one() {
        let cfg = cfg();
        let x = generate_pilot(&cfg, 1).x;
        let ch = ChannelRealization { paths: vec![path(C::new(0.3, -0.2), 12.0, 2, 0.1)] };
        let rb = synthesize_received(&ch, &x.view(), 0.0, 9, &cfg).unwrap();
        // every 2x2 minor vanishes
        for r in 1..cfg.antennas {
            for t in 1..cfg.pilot_len {
                let minor = rb.y[[0, 0]] * rb.y[[r, t]] - rb.y[[0, t]] * rb.y[[r, 0]];
                assert!(minor.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn superposition_of_paths() {
        let cfg = cfg();
        let x = generate_pilot(&cfg, 2).x;
        let p1 = path(C::new(1.0, 0.5), -20.0, 1, 0.2);
        let p2 = path(C::new(-0.4, 0.1), 33.0, 4, -0.7);
        let both = ChannelRealization { paths: vec![p1, p2] };
        let y = noiseless_received(&both, &x.view(), &cfg).unwrap();
        let y1 = noiseless_received(&ChannelRealization { paths: vec![p1] }, &x.view(), &cfg).unwrap();
        let y2 = noiseless_received(&ChannelRealization { paths: vec![p2] }, &x.view(), &cfg).unwrap();
        assert!((&y - &(y1 + y2)).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn channel_matrix_matches_received() {
        let cfg = cfg();
        let x = generate_pilot(&cfg, 3).x;
        let ch = ChannelRealization {
            paths: vec![path(C::new(1.0, 0.5), -20.0, 1, 0.2), path(C::new(0.2, 0.9), 50.0, 5, 0.45)],
        };
        let h = full_channel_matrix(&ch, &cfg);
        assert_eq!(h.dim(), (cfg.pilot_len * cfg.antennas, cfg.pilot_len));
        let hx = apply_channel(&h.view(), &x.view(), cfg.antennas);
        let y = noiseless_received(&ch, &x.view(), &cfg).unwrap();
        assert!((&hx - &y).iter().all(|z| z.norm() <= 1e-10));
    }

    #[test]
    fn channel_matrix_edge_cases() {
        let cfg = cfg();
        let empty = ChannelRealization::<f64>::default();
        assert!(full_channel_matrix(&empty, &cfg).iter().all(|z| z.norm() == 0.0));
        let cfg_full = cfg.clone().with_delay_taps(cfg.pilot_len);
        let g = C::new(0.7, -0.1);
        let ch = ChannelRealization { paths: vec![path(g, 10.0, cfg.pilot_len, 0.0)] };
        let h = full_channel_matrix(&ch, &cfg_full);
        let (a, _) = array_response(10f64.to_radians(), &cfg_full);
        let nb = cfg.antennas;
        for i in 0..h.nrows() {
            for j in 0..h.ncols() {
                let want = if i / nb == j { g * a[i % nb] } else { C::new(0.0, 0.0) };
                assert!((h[[i, j]] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn noise_has_requested_variance() {
        let y0 = Array2::<C>::zeros((40, 250));
        let y = add_noise(&y0.view(), 0.5, 11);
        let var = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / y.len() as f64;
        assert!((var - 0.5).abs() < 0.03, "variance {var}");
        assert_eq!(add_noise(&y0.view(), 0.5, 11), y);
    }

    #[test]
    fn snr_sets_sigma() {
        let y0 = Array2::from_elem((2, 3), C::new(2.0, 0.0));
        assert!((sigma2_for_snr(&y0.view(), 10.0) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn tap_doppler_uses_strongest_path() {
        let ch = ChannelRealization {
            paths: vec![
                path(C::new(0.1, 0.0), 0.0, 2, 0.5),
                path(C::new(0.9, 0.0), 0.0, 2, -0.25),
                path(C::new(0.3, 0.0), 0.0, 3, 0.125),
            ],
        };
        assert_eq!(ch.tap_dopplers(4), vec![0.0, -0.25, 0.125, 0.0]);
    }

    #[test]
    fn reconstruct_matches_full_matrix_on_grid() {
        let cfg = cfg();
        let grid = cfg.angle_grid_points();
        let (a, _) = crate::otfs_model::signal::steering_matrices(&grid, &cfg);
        let mut u = Array2::<C>::zeros((cfg.angle_grid, cfg.delay_taps));
        u[[3, 1]] = C::new(0.5, 0.5);
        let mut kap = vec![0.0; cfg.delay_taps];
        kap[1] = 0.3;
        let h_hat = reconstruct_channel(&a.view(), &u.view(), &kap, cfg.pilot_len);
        let ch = ChannelRealization { paths: vec![PathComponent { gain: C::new(0.5, 0.5), aoa: grid[3], delay_tap: 2, doppler: 0.3 }] };
        let h = full_channel_matrix(&ch, &cfg);
        assert!((&h - &h_hat).iter().all(|z| z.norm() < 1e-14));
    }
}
