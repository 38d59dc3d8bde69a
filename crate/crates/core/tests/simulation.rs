use ndarray::Array2;

use splidar::scene::{calibrate_levels, expected_histogram, simulate, Irf, Scene, Synthetic};

#[test]
fn grand_mean_matches_ppp() {
    let irf = Irf::gaussian(2.0).unwrap();
    let scene = calibrate_levels(&Synthetic::Sphere.scene(64, 64, 256).unwrap(), 4.0, 1.0).unwrap();
    let bound = 4.0 / (64.0f64 * 64.0).sqrt() * 3.0;
    for seed in [1, 2, 3] {
        let cube = simulate(&scene, &irf, seed).unwrap();
        let mean = cube.total() as f64 / (64.0 * 64.0);
        assert!((mean - 4.0).abs() < bound, "seed {seed}: mean {mean}");
    }
}

#[test]
fn expected_counts_follow_the_model() {
    let irf = Irf::gaussian(1.5).unwrap();
    let expected = 7.0 + 0.01 * 128.0;
    // Signal fully inside the window: r * sum g + b T.
    let total: f64 = expected_histogram(7.0, 30.0, 0.01, &irf, 128).iter().sum();
    assert!((total - expected).abs() < 1e-9, "{total}");
    // A fractional shift drops the outer fractions of the end samples; for a
    // symmetric response that is exactly one end sample.
    let total: f64 = expected_histogram(7.0, 30.25, 0.01, &irf, 128).iter().sum();
    assert!((expected - total - 7.0 * irf.samples()[0]).abs() < 1e-12, "{total}");
}

#[test]
fn per_pixel_means_track_reflectivity() {
    let irf = Irf::gaussian(1.0).unwrap();
    let depth = Array2::from_shape_fn((2, 1), |(r, _)| 10.0 + r as f64 * 20.0);
    let refl = ndarray::arr2(&[[2.0], [20.0]]);
    let scene = Scene::new(depth, refl, Array2::from_elem((2, 1), 0.02), 64).unwrap();
    let runs = 400;
    let mut sums = [0.0; 2];
    for seed in 0..runs {
        let cube = simulate(&scene, &irf, seed).unwrap();
        for (r, s) in sums.iter_mut().enumerate() {
            *s += cube.histogram(r, 0).iter().map(|&c| c as f64).sum::<f64>();
        }
    }
    for (r, expected) in [(0, 2.0 + 1.28), (1, 20.0 + 1.28)] {
        let mean = sums[r] / runs as f64;
        let se = (expected / runs as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "pixel {r}: {mean} vs {expected}");
    }
}
