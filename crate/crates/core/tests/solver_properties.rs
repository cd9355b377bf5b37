use ndarray::{Array1, Array2};
use otfs_burst::burst_vbi::{
    run_solver_from, HyperParams, PosteriorState, PriorMode, PriorState, RefineSchedule, SweepView,
};
use otfs_burst::linalg::{cholesky, herm, hpd_inverse, kron, vec_cols};
use otfs_burst::otfs_model::{
    draw_paths_at_angles, generate_pilot, noiseless_received, synthesize_received_snr, DictionaryState, SystemConfig,
};
use otfs_burst::refinement::{doppler_derivative_coeffs, expected_log_likelihood, refine_angles, refine_doppler};
use otfs_burst::{Cx, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

fn small_cfg() -> SystemConfig<f64> {
    SystemConfig::half_wavelength_ula(32, 8, 15e3, 6e9, 12, 6, 10, 4)
}

struct Instance {
    cfg: SystemConfig<f64>,
    x: Array1<C64>,
    y: Array2<C64>,
}

fn instance(seed: u64, snr_db: Option<f64>) -> Instance {
    let cfg = small_cfg();
    let x = generate_pilot(&cfg, seed).x;
    let ch = draw_paths_at_angles(&cfg, &[-31.0, -4.0, 22.5], (1, 4), 1500.0, seed).unwrap();
    let y = match snr_db {
        Some(snr) => synthesize_received_snr(&ch, &x.view(), snr, seed, &cfg).unwrap().y,
        None => noiseless_received(&ch, &x.view(), &cfg).unwrap(),
    };
    Instance { cfg, x, y }
}

fn raw(prior: PriorMode, iters: usize, refine: RefineSchedule) -> HyperParams<f64> {
    HyperParams { prior, max_iters: iters, tol: 1e-300, refine, reference_power: None, ..HyperParams::default() }
}

fn trajectory(inst: &Instance, hyper: &HyperParams<f64>) -> Vec<(PosteriorState<f64>, DictionaryState<f64>)> {
    let dict = DictionaryState::on_grid(&inst.cfg, &inst.x.view()).unwrap();
    let mut out = Vec::new();
    run_solver_from(&inst.y.view(), dict, hyper, &mut |v: &SweepView<'_, f64>| {
        out.push((v.state.clone(), v.dict.clone()));
    })
    .unwrap();
    out
}

fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn positive_gamma_parameters(s: &PosteriorState<f64>) -> bool {
    let mut all = vec![s.c_alpha, s.d_alpha];
    match &s.prior {
        PriorState::Hybrid(h) => {
            all.extend(h.c_gamma.iter().chain(&h.d_gamma).chain(&h.c_rho).chain(&h.d_rho));
        }
        PriorState::Iid(p) => all.extend(p.c_xi.iter().chain(&p.d_xi)),
    }
    all.iter().all(|&v| v > 0.0 && v.is_finite())
}

fn check_rotation(seed: u64, phi: f64, refine: RefineSchedule, tol: f64) -> Result<(), TestCaseError> {
    let inst = instance(seed, Some(10.0));
    let rot = Cx::from_polar(1.0, phi);
    let turned = Instance { cfg: inst.cfg.clone(), x: inst.x.clone(), y: inst.y.mapv(|z| z * rot) };
    let hyper = raw(PriorMode::HybridBurst, 12, refine);
    let a = trajectory(&inst, &hyper);
    let b = trajectory(&turned, &hyper);
    for ((sa, da), (sb, db)) in a.iter().zip(&b) {
        prop_assert!(rel_diff(sa.alpha_hat(), sb.alpha_hat()) <= tol);
        for (wa, wb) in sa.varpi().iter().zip(sb.varpi().iter()) {
            prop_assert!((wa - wb).abs() <= tol * wa.abs().max(1e-6));
        }
        let (ha, hb) = (sa.hybrid().unwrap(), sb.hybrid().unwrap());
        for (ga, gb) in (&ha.c_gamma / &ha.d_gamma).iter().zip((&hb.c_gamma / &hb.d_gamma).iter()) {
            prop_assert!(rel_diff(*ga, *gb) <= tol);
        }
        for (ra, rb) in (&ha.c_rho / &ha.d_rho).iter().zip((&hb.c_rho / &hb.d_rho).iter()) {
            prop_assert!(rel_diff(*ra, *rb) <= tol);
        }
        prop_assert!(ha.z_hat.iter().zip(hb.z_hat.iter()).all(|(p, q)| (p - q).abs() <= tol));
        let err = max_abs(&(&sa.mu.mapv(|z| z * rot) - &sb.mu));
        prop_assert!(err <= tol * max_abs(&sa.mu).max(1e-12), "{}", err);
        for (ka, kb) in da.kappa.iter().zip(&db.kappa) {
            prop_assert!((ka - kb).abs() <= tol, "{} {}", ka, kb);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn posterior_invariants_hold_every_sweep(seed in 0u64..1000, snr in -5.0f64..30.0, iid in any::<bool>()) {
        let prior = if iid { PriorMode::Iid } else { PriorMode::HybridBurst };
        let inst = instance(seed, Some(snr));
        for (state, _) in trajectory(&inst, &raw(prior, 15, RefineSchedule::every_sweep())) {
            for sig in &state.sigma {
                let asym = max_abs(&(sig - &herm(&sig.view())));
                prop_assert!(asym <= 1e-10 * max_abs(sig).max(1.0), "asymmetry {}", asym);
                prop_assert!(cholesky(&sig.view()).is_ok());
            }
            prop_assert!(positive_gamma_parameters(&state));
            if let PriorState::Hybrid(h) = &state.prior {
                for row in h.z_hat.rows() {
                    prop_assert!(row.iter().all(|&z| z >= 0.0));
                    prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn phase_rotation_rotates_means_only(seed in 0u64..1000, phi in -3.1f64..3.1) {
        check_rotation(seed, phi, RefineSchedule::disabled(), 1e-9)?;
        // κ comes out of polynomial rooting, which sets a looser floor
        check_rotation(seed, phi, RefineSchedule::every_sweep(), 1e-6)?;
    }

    #[test]
    fn single_tap_posterior_matches_dense_oracle(seed in any::<u64>(), alpha in 0.1f64..50.0) {
        let cfg = SystemConfig::<f64>::half_wavelength_ula(32, 8, 15e3, 6e9, 7, 5, 9, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = generate_pilot(&cfg, seed).x;
        let dict = DictionaryState::on_grid(&cfg, &x.view()).unwrap();
        let y = Array2::from_shape_fn((5, 7), |_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)));
        let spread = Uniform::new(0.05, 20.0).unwrap();
        let prec = Array2::from_shape_fn((9, 1), |_| spread.sample(&mut rng));

        let hyper = HyperParams { prior: PriorMode::Iid, ..HyperParams::default() };
        let mut state = PosteriorState::init(&cfg, &hyper);
        state.update_g_factors_with(&dict, &y.view(), &prec.view(), alpha, 1e-10).unwrap();

        let phi = kron(&dict.s.view(), &dict.a.view());
        let mut info = herm(&phi.view()).dot(&phi).mapv(|z| z * alpha);
        for i in 0..9 {
            info[[i, i]] += C64::new(prec[[i, 0]], 0.0);
        }
        let (sigma, logdet_info) = hpd_inverse(&info.view()).unwrap();
        let mean = sigma.dot(&herm(&phi.view()).dot(&vec_cols(&y.view()))).mapv(|z| z * alpha);

        let scale = max_abs(&sigma);
        prop_assert!(max_abs(&(&state.sigma[0] - &sigma)) <= 1e-8 * scale);
        let mean_err = (&state.mu.column(0) - &mean).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(mean_err <= 1e-8 * mean.iter().map(|z| z.norm()).fold(1e-12, f64::max));
        prop_assert!((state.logdet_sigma[0] + logdet_info).abs() <= 1e-8 * logdet_info.abs().max(1.0));
    }
}

#[test]
fn free_energy_nondecreasing_without_refinement() {
    for seed in 0..10u64 {
        for prior in [PriorMode::HybridBurst, PriorMode::Iid] {
            let inst = instance(100 + seed, Some(-5.0 + 3.0 * seed as f64));
            let dict = DictionaryState::on_grid(&inst.cfg, &inst.x.view()).unwrap();
            let hyper = raw(prior, 60, RefineSchedule::disabled());
            let r = run_solver_from(&inst.y.view(), dict, &hyper, &mut |_| {}).unwrap();
            for (k, w) in r.trace.windows(2).enumerate() {
                assert!(w[1] >= w[0] - 1e-8 * w[0].abs(), "seed {seed} {prior:?} sweep {}: {} -> {}", k + 1, w[0], w[1]);
            }
        }
    }
}

#[test]
fn frozen_hybrid_reproduces_iid_trajectory() {
    for seed in [3u64, 17, 29] {
        let inst = instance(seed, Some(8.0));
        let hyper = HyperParams { freeze_assignments: true, ..raw(PriorMode::HybridBurst, 25, RefineSchedule::disabled()) };
        let hybrid = trajectory(&inst, &hyper);

        let dict = DictionaryState::on_grid(&inst.cfg, &inst.x.view()).unwrap();
        let iid_hyper = raw(PriorMode::Iid, 25, RefineSchedule::disabled());
        let mut iid = PosteriorState::init(&inst.cfg, &iid_hyper);
        let mut prec = Array2::from_elem((inst.cfg.angle_grid, inst.cfg.delay_taps), 1.0);
        let mut alpha = 1.0;
        for (k, (h, _)) in hybrid.iter().enumerate() {
            iid.update_g_factors_with(&dict, &inst.y.view(), &prec.view(), alpha, hyper.jitter).unwrap();
            let err = max_abs(&(&iid.mu - &h.mu));
            assert!(err <= 1e-9 * max_abs(&h.mu).max(1.0), "seed {seed} sweep {k}: {err}");
            let hz = h.hybrid().unwrap();
            assert!(hz.z_hat.column(1).iter().all(|&z| z == 1.0));
            // matched ξ̂_{m,n} = γ̂_m ρ̂_n
            prec = h.coefficient_precisions().unwrap();
            alpha = h.alpha_hat();
        }
    }
}

#[test]
fn refinement_keeps_likelihood_at_converged_posterior() {
    for seed in [5u64, 6, 7] {
        let inst = instance(seed, None);
        let (state, dict) = trajectory(&inst, &raw(PriorMode::HybridBurst, 120, RefineSchedule::disabled())).pop().unwrap();
        let y = inst.y.view();
        let mut d = dict.clone();
        let before = expected_log_likelihood(&state, &d, &y);
        refine_angles(&state, &mut d, &y).unwrap();
        let after_angles = expected_log_likelihood(&state, &d, &y);
        assert!(after_angles >= before - 1e-8 * before.abs(), "seed {seed}: {before} -> {after_angles}");
        refine_doppler(&state, &mut d, &y).unwrap();
        let after_doppler = expected_log_likelihood(&state, &d, &y);
        assert!(
            after_doppler >= after_angles - 1e-8 * after_angles.abs(),
            "seed {seed}: {after_angles} -> {after_doppler}"
        );
    }
}

#[test]
fn angle_steps_stay_within_half_cell() {
    let inst = instance(11, Some(15.0));
    let half = 0.5 * inst.cfg.grid_cell();
    let traj = trajectory(&inst, &raw(PriorMode::HybridBurst, 30, RefineSchedule::every_sweep()));
    let mut prev = inst.cfg.angle_grid_points();
    for (_, dict) in &traj {
        let now = dict.effective_angles();
        for (a, b) in prev.iter().zip(&now) {
            assert!((a - b).abs() <= half * (1.0 + 1e-12));
        }
        assert!(now.windows(2).all(|w| w[0] < w[1]));
        prev = now;
    }
}

#[test]
fn doppler_polynomial_has_one_coefficient_per_sample() {
    let inst = instance(2, Some(10.0));
    let (state, dict) = trajectory(&inst, &raw(PriorMode::HybridBurst, 5, RefineSchedule::disabled())).pop().unwrap();
    for n in 0..inst.cfg.delay_taps {
        let ws = doppler_derivative_coeffs(&state, &dict, &inst.y.view(), n);
        assert_eq!(ws.eps_coeffs.len(), inst.cfg.pilot_len);
    }
}
