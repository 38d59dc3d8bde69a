//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use ndarray::{Array2, Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splidar::fusion::{self, GuidanceWeights, ReconState};
use splidar::io::{self, DepthMap, DepthUnits};
use splidar::metrics::dae;
use splidar::scene::{calibrate_levels, simulate, Irf, Scene, Synthetic};
use splidar::{FusionConfig, MultiscaleEstimates};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Runs a criterion with a wall-clock budget (`None` = unbounded).
fn run(id: &str, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = budget.is_none_or(|b| elapsed <= b);
    let ok = out.passed && in_time;
    let budget_txt = budget.map_or("no limit".to_string(), |b| format!("limit {:.0} s", b.as_secs_f64()));
    println!(
        "[{}] {id} {name}: {} ({:.2} s, {budget_txt})",
        if ok { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    ok
}

const BINS: usize = 256;
const IRF_SIGMA: f64 = 2.0;

fn ac1_calibration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let ppp = 10f64.powf(rng.random_range(-1.0..2.5));
        let sbr = 10f64.powf(rng.random_range(-2.0..2.0));
        let depth = Array2::from_shape_fn((16, 16), |_| rng.random_range(0.0..200.0));
        let refl = Array2::from_shape_fn((16, 16), |_| rng.random_range(0.0..3.0));
        let scene = Scene::new(depth, refl, Array2::zeros((16, 16)), BINS).unwrap();
        let s = calibrate_levels(&scene, ppp, sbr).unwrap();
        // Both sums evaluated directly, independently of Scene::ppp/sbr.
        let t = BINS as f64;
        let n = s.reflectivity.len() as f64;
        let sum_r: f64 = s.reflectivity.iter().sum();
        let sum_bt: f64 = s.background.iter().map(|b| b * t).sum();
        let got_ppp = (sum_r + sum_bt) / n;
        let got_sbr = sum_r / sum_bt;
        worst = worst
            .max(((got_ppp - ppp) / ppp).abs())
            .max(((got_sbr - sbr) / sbr).abs());
    }
    outcome(worst <= 1e-12, format!("max relative error {worst:.2e} (tol 1e-12)"))
}

fn ac2_simulator_mean() -> Outcome {
    let irf = Irf::gaussian(IRF_SIGMA).unwrap();
    let scene = calibrate_levels(&Synthetic::Step.scene(64, 64, BINS).unwrap(), 4.0, 1.0).unwrap();
    let mut details = Vec::new();
    let mut ok = true;
    for seed in [11, 12, 13] {
        let cube = simulate(&scene, &irf, seed).unwrap();
        let totals: Vec<f64> = (0..64)
            .flat_map(|r| (0..64).map(move |c| (r, c)))
            .map(|(r, c)| cube.histogram(r, c).iter().map(|&v| v as f64).sum())
            .collect();
        let n = totals.len() as f64;
        let mean = totals.iter().sum::<f64>() / n;
        let var = totals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let z = (mean - 4.0) / se;
        ok &= z.abs() <= 3.0;
        details.push(format!("seed {seed}: mean {mean:.4} ({z:+.2} SE)"));
    }
    outcome(ok, details.join(", "))
}

/// Exhaustive oracle: objective at every candidate, smallest value among the
/// minimizers.
fn l1_oracle(cands: &[(f64, f64)]) -> f64 {
    let obj = |x: f64| cands.iter().map(|(v, w)| w * (x - v).abs()).sum::<f64>();
    let best = cands.iter().map(|c| obj(c.0)).fold(f64::INFINITY, f64::min);
    cands
        .iter()
        .filter(|c| obj(c.0) <= best + 1e-12 * (1.0 + best.abs()))
        .map(|c| c.0)
        .fold(f64::INFINITY, f64::min)
}

/// Random single-pixel fusion problems on a 3x3 lattice; the centre pixel sees
/// all nine neighbours at every level.
struct Instance {
    est: MultiscaleEstimates,
    weights: GuidanceWeights,
    state: ReconState,
}

fn random_instance(rng: &mut ChaCha8Rng, levels: usize, integer: bool) -> Instance {
    let dim = (levels, 3, 3);
    let value = |rng: &mut ChaCha8Rng| {
        if integer {
            rng.random_range(0..6) as f64
        } else {
            rng.random_range(0.0..10.0)
        }
    };
    let d = Array3::from_shape_fn(dim, |_| value(rng));
    let d_ml = Array3::from_shape_fn(dim, |_| value(rng));
    let x = Array2::from_shape_fn((3, 3), |_| value(rng));
    let eps = Array2::from_shape_fn((3, 3), |_| rng.random_range(0.2..5.0));
    let sigma2 = Array3::from_shape_fn(dim, |_| rng.random_range(0.05..4.0));
    let offsets: Vec<(isize, isize)> = (-1..=1).flat_map(|a| (-1..=1).map(move |b| (a, b))).collect();
    let mut w = Array4::<f64>::zeros((levels, 3, 3, 9));
    for l in 0..levels {
        for r in 0..3 {
            for c in 0..3 {
                let mut raw = [0.0; 9];
                for (k, (dr, dc)) in offsets.iter().enumerate() {
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if (0..3).contains(&nr) && (0..3).contains(&nc) && !rng.random_bool(0.1) {
                        raw[k] = if integer { rng.random_range(1..4) as f64 } else { rng.random_range(0.01..1.0) };
                    }
                }
                let total: f64 = raw.iter().sum();
                if total == 0.0 {
                    raw[4] = 1.0;
                }
                let total: f64 = raw.iter().sum();
                for k in 0..9 {
                    w[[l, r, c, k]] = raw[k] / total;
                }
            }
        }
    }
    let est = MultiscaleEstimates::new(d_ml, Array3::ones(dim), sigma2, Array3::zeros(dim), 64).unwrap();
    let weights = GuidanceWeights::from_values(1, w).unwrap();
    Instance {
        est,
        weights,
        state: ReconState { x, eps, d, iter: 0, objective: 0.0 },
    }
}

fn ac3_update_x() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for i in 0..1000 {
        let levels = rng.random_range(1..=3);
        let inst = random_instance(&mut rng, levels, i % 2 == 0);
        let x = fusion::update_x(&inst.state, &inst.weights);
        let mut cands = Vec::new();
        for l in 0..levels {
            for r in 0..3 {
                for c in 0..3 {
                    let k = r * 3 + c;
                    cands.push((inst.state.d[[l, r, c]], inst.weights.values()[[l, 1, 1, k]]));
                }
            }
        }
        if x[[1, 1]] != l1_oracle(&cands) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches}/1000 mismatches (half the instances have ties)"))
}

fn ac4_update_d() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let levels = rng.random_range(1..=2);
        let inst = random_instance(&mut rng, levels, false);
        let d = fusion::update_d(&inst.state, &inst.est, &inst.weights);
        for l in 0..levels {
            // Objective of d at the centre pixel, written out from the arrays:
            // data term plus every x_n' prior that contains the centre.
            let m = inst.est.d_ml[[l, 1, 1]];
            let v = inst.est.sigma2[[l, 1, 1]];
            let terms: Vec<(f64, f64)> = (0..9)
                .map(|k| {
                    let (r, c) = (k / 3, k % 3);
                    // The centre sits at offset (1 - r, 1 - c) from (r, c).
                    let back = (2 - r) * 3 + (2 - c);
                    (inst.state.x[[r, c]], inst.weights.values()[[l, r, c, back]] / inst.state.eps[[r, c]])
                })
                .collect();
            let f = |z: f64| (z - m).powi(2) / (2.0 * v) + terms.iter().map(|(t, c)| c * (t - z).abs()).sum::<f64>();
            let lo = terms.iter().map(|t| t.0).fold(m, f64::min) - 1.0;
            let hi = terms.iter().map(|t| t.0).fold(m, f64::max) + 1.0;
            let steps = ((hi - lo) / 1e-4).ceil() as usize;
            let mut best = (lo, f(lo));
            for i in 1..=steps {
                let z = lo + i as f64 * 1e-4;
                let fz = f(z);
                if fz < best.1 {
                    best = (z, fz);
                }
            }
            worst = worst.max((d[[l, 1, 1]] - best.0).abs());
        }
    }
    outcome(worst <= 1e-3, format!("max |exact - grid| {worst:.2e} (tol 1e-3, grid 1e-4)"))
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn ac5_update_eps() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let levels = rng.random_range(1..=3);
        let inst = random_instance(&mut rng, levels, false);
        let config = FusionConfig {
            alpha: rng.random_range(0.1..5.0),
            beta: rng.random_range(0.1..20.0),
            window_radius: 1,
            max_iters: 1,
            tol: 1e-4,
            scales: levels,
        };
        let eps = fusion::update_eps(&inst.state, &inst.weights, &config);
        // Log posterior of eps at the centre pixel: Laplace factors with w > 0
        // and the inverse-gamma prior.
        let xn = inst.state.x[[1, 1]];
        let mut s = 0.0;
        let mut m = 0.0;
        for l in 0..levels {
            for k in 0..9 {
                let w = inst.weights.values()[[l, 1, 1, k]];
                if w > 0.0 {
                    s += w * (xn - inst.state.d[[l, k / 3, k % 3]]).abs();
                    m += 1.0;
                }
            }
        }
        let log_post = |log_e: f64| {
            let e = log_e.exp();
            -(config.alpha + 1.0 + m) * log_e - (config.beta + s) / e
        };
        let oracle = golden_section_max(log_post, (1e-8f64).ln(), (1e8f64).ln()).exp();
        worst = worst.max(((eps[[1, 1]] - oracle) / oracle).abs());
    }
    outcome(worst <= 1e-6, format!("max relative error {worst:.2e} (tol 1e-6)"))
}

fn ac6_monotone() -> Outcome {
    let irf = Irf::gaussian(IRF_SIGMA).unwrap();
    let config = FusionConfig::for_irf(&irf);
    let scene = calibrate_levels(&Synthetic::Staircase.scene(32, 32, BINS).unwrap(), 4.0, 1.0).unwrap();
    let mut worst_increase = f64::NEG_INFINITY;
    let mut updates = 0;
    for seed in 0..20 {
        let cube = simulate(&scene, &irf, 600 + seed).unwrap();
        let rec = fusion::reconstruct(&cube, &irf, &config).unwrap();
        for pair in rec.objective_trace.windows(2) {
            worst_increase = worst_increase.max(pair[1] - pair[0]);
            updates += 1;
        }
        if rec.objective_trace.iter().any(|v| !v.is_finite()) {
            return outcome(false, format!("seed {seed}: non-finite objective"));
        }
    }
    outcome(
        worst_increase <= 1e-9,
        format!("{updates} block updates, largest change {worst_increase:+.3e} (slack 1e-9)"),
    )
}

fn ac7_fusion_beats_ml() -> Outcome {
    let irf = Irf::gaussian(IRF_SIGMA).unwrap();
    let config = FusionConfig::for_irf(&irf);
    let scene = calibrate_levels(&Synthetic::Step.scene(64, 64, BINS).unwrap(), 4.0, 1.0).unwrap();
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..10 {
        let cube = simulate(&scene, &irf, 700 + seed).unwrap();
        let rec = fusion::reconstruct(&cube, &irf, &config).unwrap();
        let ml = rec.estimates.d_ml.index_axis(ndarray::Axis(0), 0).to_owned();
        let fused = dae(&rec.depth, &scene.depth).unwrap();
        let baseline = dae(&ml, &scene.depth).unwrap();
        if fused < baseline {
            wins += 1;
        }
        pairs.push(format!("{fused:.2}/{baseline:.2}"));
    }
    outcome(wins >= 9, format!("{wins}/10 wins (need 9); DAE fused/ML: {}", pairs.join(" ")))
}

fn ac8_noiseless() -> Outcome {
    let irf = Irf::gaussian(IRF_SIGMA).unwrap();
    let config = FusionConfig::for_irf(&irf);
    let depth = Array2::from_elem((32, 32), 100.4);
    let scene = Scene::new(depth, Array2::from_elem((32, 32), 1000.0), Array2::zeros((32, 32)), BINS).unwrap();
    let cube = simulate(&scene, &irf, 8).unwrap();
    let rec = fusion::reconstruct(&cube, &irf, &config).unwrap();
    let err = dae(&rec.depth, &scene.depth).unwrap();
    let max_eps = rec.eps.iter().copied().fold(0.0, f64::max);
    outcome(err < 0.5, format!("DAE {err:.4} bins (need < 0.5), max eps {max_eps:.4}"))
}

fn ac9_round_trips() -> Outcome {
    let irf = Irf::gaussian(IRF_SIGMA).unwrap();
    let scene = calibrate_levels(&Synthetic::Sphere.scene(24, 20, 128).unwrap(), 6.0, 2.0).unwrap();
    let cube = simulate(&scene, &irf, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let cube_path = dir.path().join("c.splh");
    io::write_cube(&cube_path, &cube).unwrap();
    let cube_back = io::read_cube(&cube_path).unwrap();
    let cube_ok = cube_back == cube && std::fs::read(&cube_path).unwrap() == io::encode_cube(&cube_back);

    let map = DepthMap::from_f64(&scene.depth, DepthUnits::Bins);
    let map_path = dir.path().join("d.spdm");
    io::write_depth_map(&map_path, &map).unwrap();
    let map_back = io::read_depth_map(&map_path).unwrap();
    let map_ok = map_back.units == map.units
        && map_back.values.iter().zip(map.values.iter()).all(|(a, b)| a.to_bits() == b.to_bits())
        && std::fs::read(&map_path).unwrap() == io::encode_depth_map(&map_back);

    let eps = scene.depth.mapv(|d| 0.1 + d / 50.0);
    let ply_path = dir.path().join("p.ply");
    io::write_ply(&ply_path, &scene.depth, Some(&eps), 0.0375).unwrap();
    let cloud = io::parse_ply(&std::fs::read_to_string(&ply_path).unwrap()).unwrap();
    let ply_ok = cloud.points.len() == scene.depth.len()
        && scene
            .depth
            .indexed_iter()
            .all(|((r, c), &d)| cloud.points[r * scene.width() + c] == [c as f32, r as f32, (d * 0.0375) as f32]);

    outcome(
        cube_ok && map_ok && ply_ok,
        format!("cube {cube_ok}, depth map {map_ok}, ply {ply_ok}"),
    )
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        run("AC1", "calibration exactness", Some(s(1)), ac1_calibration),
        run("AC2", "simulator statistics", Some(s(5)), ac2_simulator_mean),
        run("AC3", "update_x oracle equivalence", Some(s(1)), ac3_update_x),
        run("AC4", "update_d oracle equivalence", Some(s(10)), ac4_update_d),
        run("AC5", "update_eps oracle equivalence", Some(s(5)), ac5_update_eps),
        run("AC6", "posterior monotonicity", None, ac6_monotone),
        run("AC7", "fusion beats per-pixel ML", Some(s(60)), ac7_fusion_beats_ml),
        run("AC8", "noiseless sanity", Some(s(10)), ac8_noiseless),
        run("AC9", "format round-trips", None, ac9_round_trips),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
