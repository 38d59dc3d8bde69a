use ndarray::{Array2, Axis};

use splidar::fusion::{
    compute_guidance_weights, initial_state, negative_log_posterior, reconstruct, update_d,
    update_eps, update_x,
};
use splidar::metrics::{dae, outlier_fraction};
use splidar::scene::{calibrate_levels, simulate, Irf, Scene, Synthetic};
use splidar::{build_pyramid, estimate_all, FusionConfig};

#[test]
fn fusion_preserves_step_edges() {
    let irf = Irf::gaussian(2.0).unwrap();
    let config = FusionConfig::for_irf(&irf);
    let scene = calibrate_levels(&Synthetic::Step.scene(64, 64, 256).unwrap(), 4.0, 4.0).unwrap();
    let threshold = 3.0 * irf.rms_width();
    for seed in 0..8 {
        let cube = simulate(&scene, &irf, seed).unwrap();
        let rec = reconstruct(&cube, &irf, &config).unwrap();
        let coarse = rec.estimates.d_ml.index_axis(Axis(0), 2).to_owned();
        let fused = outlier_fraction(&rec.depth, &scene.depth, threshold).unwrap();
        let blurred = outlier_fraction(&coarse, &scene.depth, threshold).unwrap();
        assert!(fused < blurred, "seed {seed}: fused {fused} vs level-3 {blurred}");
    }
}

#[test]
fn noiseless_flat_scene() {
    let irf = Irf::gaussian(2.0).unwrap();
    let config = FusionConfig::for_irf(&irf);
    let scene = Scene::new(
        Array2::from_elem((16, 16), 80.7),
        Array2::from_elem((16, 16), 1000.0),
        Array2::zeros((16, 16)),
        256,
    )
    .unwrap();
    let rec = reconstruct(&simulate(&scene, &irf, 0).unwrap(), &irf, &config).unwrap();
    assert!(rec.depth.iter().all(|&x| (x - 80.7).abs() < 0.5));
    // Residuals are tiny, so eps sits near beta / (alpha + M + 1).
    let floor_interior = config.beta / (config.alpha + 27.0 + 1.0);
    for r in 1..15 {
        for c in 1..15 {
            let e = rec.eps[[r, c]];
            assert!(e >= floor_interior && e < 2.0 * floor_interior, "eps {e}");
        }
    }
}

#[test]
fn each_update_decreases_objective_on_simulated_data() {
    let irf = Irf::gaussian(2.0).unwrap();
    let config = FusionConfig::for_irf(&irf);
    let scene = calibrate_levels(&Synthetic::Sphere.scene(24, 24, 128).unwrap(), 4.0, 1.0).unwrap();
    for seed in 0..5 {
        let cube = simulate(&scene, &irf, seed).unwrap();
        let est = estimate_all(&build_pyramid(&cube, 3).unwrap(), &irf).unwrap();
        let weights = compute_guidance_weights(&est, 1).unwrap();
        let mut state = initial_state(&est, &weights, &config);
        let mut f = negative_log_posterior(&state, &est, &weights, &config);
        for _ in 0..4 {
            state.d = update_d(&state, &est, &weights);
            let g = negative_log_posterior(&state, &est, &weights, &config);
            assert!(g <= f + 1e-9);
            state.eps = update_eps(&state, &weights, &config);
            let h = negative_log_posterior(&state, &est, &weights, &config);
            assert!(h <= g + 1e-9);
            state.x = update_x(&state, &weights);
            f = negative_log_posterior(&state, &est, &weights, &config);
            assert!(f <= h + 1e-9);
        }
    }
}

#[test]
fn reconstruct_rejects_bad_inputs() {
    let irf = Irf::gaussian(2.0).unwrap();
    let cube = simulate(&Synthetic::Step.scene(6, 6, 64).unwrap(), &irf, 0).unwrap();
    let config = FusionConfig::for_irf(&irf);
    assert!(matches!(reconstruct(&cube, &irf, &config), Err(splidar::Error::InvalidScale(_))));
    let zero = FusionConfig { max_iters: 0, scales: 2, ..config.clone() };
    assert!(reconstruct(&cube, &irf, &zero).is_err());
    let one = FusionConfig { max_iters: 1, scales: 2, ..config };
    let rec = reconstruct(&cube, &irf, &one).unwrap();
    assert_eq!(rec.iterations, 1);
}

#[test]
fn staircase_easy_regime() {
    let irf = Irf::gaussian(2.0).unwrap();
    let config = FusionConfig::for_irf(&irf);
    let scene = calibrate_levels(&Synthetic::Staircase.scene(32, 32, 256).unwrap(), 16.0, 4.0).unwrap();
    let rec = reconstruct(&simulate(&scene, &irf, 5).unwrap(), &irf, &config).unwrap();
    let err = dae(&rec.depth, &scene.depth).unwrap();
    assert!(err < 1.0, "DAE {err}");
    assert!(rec.eps.iter().all(|&e| e > 0.0 && e.is_finite()));
    assert!(rec.depth.iter().all(|&x| (0.0..256.0).contains(&x)));
}
