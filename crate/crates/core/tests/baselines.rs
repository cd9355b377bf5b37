use ndarray::{Array1, Array2};
use otfs_burst::baselines::{
    l1_estimate, ls_estimate, ogvbi_estimate, search_tap_doppler, vector_ogvbi_estimate, vector_posterior, L1Params,
    OgvbiParams, VectorOgvbiParams,
};
use otfs_burst::burst_vbi::{HyperParams, PosteriorState, PriorMode};
use otfs_burst::linalg::{herm, hpd_inverse, kron, vec_cols};
use otfs_burst::otfs_model::{
    doppler_ramp, draw_paths_at_angles, full_channel_matrix, generate_pilot, nmse_single, synthesize_received_snr,
    DictionaryState, SystemConfig,
};
use otfs_burst::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn cn(rows: usize, cols: usize, seed: u64) -> Array2<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
}

fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `Φᴴ (y - Φ vec(G))` reshaped to `M_θ × N_τ`.
fn correlation(dict: &DictionaryState<f64>, y: &Array2<C64>, g: &Array2<C64>) -> Array2<C64> {
    let r = dict.residual(&y.view(), &g.view());
    herm(&dict.a.view()).dot(&r).dot(&dict.s.mapv(|z| z.conj()))
}

#[test]
fn ls_of_zero_observation_is_zero() {
    let cfg = SystemConfig::<f64>::reference();
    let x = generate_pilot(&cfg, 1).x;
    let dict = DictionaryState::on_grid(&cfg, &x.view()).unwrap();
    let r = ls_estimate(&Array2::zeros((40, 40)).view(), &dict).unwrap();
    assert!(r.u.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn ls_is_minimum_norm_solution() {
    // wide A, square S: Φ has full row rank and Φ⁺ = Φᴴ(ΦΦᴴ)⁻¹
    let cfg = SystemConfig::<f64>::half_wavelength_ula(32, 8, 15e3, 6e9, 4, 5, 12, 4);
    let x = generate_pilot(&cfg, 9).x;
    let dict = DictionaryState::new(&cfg, &x.view(), cfg.angle_grid_points(), vec![0.3, -0.2, 0.0, 0.7]).unwrap();
    let y = cn(5, 4, 2);
    let r = ls_estimate(&y.view(), &dict).unwrap();

    let phi = kron(&dict.s.view(), &dict.a.view());
    let (gram_inv, _) = hpd_inverse(&phi.dot(&herm(&phi.view())).view()).unwrap();
    let g = herm(&phi.view()).dot(&gram_inv).dot(&vec_cols(&y.view()));
    let got = vec_cols(&r.u.view());
    let err = (&got - &g).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(err <= 1e-9 * g.iter().map(|z| z.norm()).fold(1.0, f64::max), "{err}");
    assert!(r.trace[0] <= 1e-18 * y.iter().map(|z| z.norm_sqr()).sum::<f64>());
}

#[test]
fn l1_of_zero_observation_is_zero() {
    let cfg = SystemConfig::<f64>::half_wavelength_ula(32, 8, 15e3, 6e9, 10, 6, 12, 3);
    let x = generate_pilot(&cfg, 1).x;
    let dict = DictionaryState::on_grid(&cfg, &x.view()).unwrap();
    let params = L1Params { lambda: Some(0.5), ..L1Params::default() };
    let r = l1_estimate(&Array2::zeros((6, 10)).view(), &dict, &params).unwrap();
    assert!(r.u.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn l1_zero_threshold_and_optimality() {
    let cfg = SystemConfig::<f64>::half_wavelength_ula(32, 8, 15e3, 6e9, 10, 6, 12, 3);
    let x = generate_pilot(&cfg, 4).x;
    let dict = DictionaryState::on_grid(&cfg, &x.view()).unwrap();
    let y = cn(6, 10, 5);
    // g = 0 is optimal exactly when λ ≥ 2 max |Φᴴy|
    let corr0 = correlation(&dict, &y, &Array2::zeros((12, 3)));
    let lam0 = 2.0 * corr0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let params = |lambda: f64| L1Params { lambda: Some(lambda), max_iters: 20000, tol: 1e-14, sigma2: None };
    let above = l1_estimate(&y.view(), &dict, &params(lam0 * 1.001)).unwrap();
    assert!(above.u.iter().all(|z| z.norm() == 0.0));

    let lambda = 0.3 * lam0;
    let r = l1_estimate(&y.view(), &dict, &params(lambda)).unwrap();
    assert!(r.u.iter().any(|z| z.norm() > 0.0));
    let corr = correlation(&dict, &y, &r.u);
    for (g, c) in r.u.iter().zip(corr.iter()) {
        let c2 = *c * 2.0;
        if g.norm() > 1e-9 {
            assert!((c2 - *g / g.norm() * lambda).norm() <= 1e-3 * lambda, "{c2} vs {g}, λ = {lambda}");
        } else {
            assert!(c2.norm() <= lambda * (1.0 + 1e-3));
        }
    }
}

#[test]
fn vector_posterior_single_tap_matches_iid_factor() {
    let cfg = SystemConfig::<f64>::half_wavelength_ula(32, 8, 15e3, 6e9, 9, 7, 15, 1);
    let x = generate_pilot(&cfg, 3).x;
    let dict = DictionaryState::new(&cfg, &x.view(), cfg.angle_grid_points(), vec![0.4]).unwrap();
    let y = cn(7, 9, 8);
    let prec = Array2::from_shape_fn((15, 1), |(m, _)| 0.1 + 0.37 * m as f64);
    let alpha = 2.5;
    let post = vector_posterior(&dict.a, &dict.s, &y.view(), &prec.view(), alpha, 1e-12, 1 << 26).unwrap();

    let hyper = HyperParams { prior: PriorMode::Iid, ..HyperParams::default() };
    let mut state = PosteriorState::init(&cfg, &hyper);
    state.update_g_factors_with(&dict, &y.view(), &prec.view(), alpha, 1e-12).unwrap();
    let err = max_abs(&(&post.mean - &state.mu));
    assert!(err <= 1e-8, "{err}");
    for m in 0..15 {
        assert!((post.variance[[m, 0]] - state.sigma[0][[m, m]].re).abs() <= 1e-8);
    }
}

#[test]
fn kronecker_and_factored_residuals_agree() {
    let cfg = SystemConfig::<f64>::half_wavelength_ula(32, 8, 15e3, 6e9, 8, 5, 7, 3);
    let x = generate_pilot(&cfg, 2).x;
    let dict = DictionaryState::new(&cfg, &x.view(), cfg.angle_grid_points(), vec![0.1, 1.3, -0.6]).unwrap();
    let y = cn(5, 8, 1);
    let g = cn(7, 3, 6);
    let phi = kron(&dict.s.view(), &dict.a.view());
    let dense: Array1<C64> = &vec_cols(&y.view()) - &phi.dot(&vec_cols(&g.view()));
    let factored = vec_cols(&dict.residual(&y.view(), &g.view()).view());
    assert!((&dense - &factored).iter().all(|z| z.norm() <= 1e-12));
}

#[test]
fn doppler_search_finds_planted_value() {
    let cfg = SystemConfig::<f64>::half_wavelength_ula(32, 8, 15e3, 6e9, 20, 4, 8, 2);
    let x = generate_pilot(&cfg, 5).x;
    let xs = otfs_burst::otfs_model::cyclic_shift(&x.view(), 2);
    let s = &xs * &doppler_ramp(0.37, 20);
    let c = Array2::from_shape_fn((4, 20), |(r, t)| s[t] * C64::new(1.0 + r as f64, 0.5));
    let k = search_tap_doppler(&c.view(), &xs.view(), 1.0);
    assert!((k - 0.37).abs() <= 1e-6, "{k}");
}

#[test]
fn baselines_recover_a_sparse_channel() {
    let cfg = SystemConfig::<f64>::half_wavelength_ula(64, 16, 15e3, 6e9, 16, 12, 24, 4);
    let x = generate_pilot(&cfg, 3).x;
    let ch = draw_paths_at_angles(&cfg, &[-20.0, 15.0], (1, 4), 0.0, 3).unwrap();
    let rx = synthesize_received_snr(&ch, &x.view(), 30.0, 3, &cfg).unwrap();
    let h = full_channel_matrix(&ch, &cfg);
    let og = ogvbi_estimate(&rx.y.view(), &x.view(), &cfg, &OgvbiParams::default()).unwrap();
    let vec = vector_ogvbi_estimate(&rx.y.view(), &x.view(), &cfg, &VectorOgvbiParams::default()).unwrap();
    for (name, r) in [("ogvbi", og), ("vector_ogvbi", vec)] {
        let e = nmse_single(&h, &r.h_hat).unwrap();
        assert!(e < 0.05, "{name}: {e}");
    }
}
