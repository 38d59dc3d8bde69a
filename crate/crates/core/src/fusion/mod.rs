//! Iterative multiscale Bayesian depth fusion.
//!
//! The latent depth `x`, the multiscale depths `d` and the per-pixel
//! uncertainty `eps` are estimated by block-coordinate descent on the negative
//! log posterior
//!
//! ```text
//! sum_{l,n} (d_n^l - d_ml_n^l)^2 / (2 sigma2_n^l)
//!   + sum_n sum_{n' in N(n), l} [ w |x_n - d_n'^l| / eps_n + ln(2 eps_n / w) ]   (w > 0 only)
//!   + sum_n (alpha + 1) ln eps_n + beta / eps_n
//! ```
//!
//! Each block has a closed-form minimizer: a weighted median for `x`, a
//! piecewise-quadratic shrinkage for each `d`, and an inverse-gamma mode for
//! `eps`. Every block update is a Jacobi sweep over a snapshot of the other
//! blocks, so results do not depend on the thread schedule.

mod solvers;
mod weights;

use ndarray::{Array2, Array3};
use rayon::prelude::*;

pub use solvers::{inverse_gamma_mode, shrink_solve, soft_threshold, weighted_median, Coupling};
pub use weights::{compute_guidance_weights, GuidanceWeights};

use crate::error::{Error, Result};
use crate::estimate::{estimate_all, MultiscaleEstimates};
use crate::pyramid::build_pyramid;
use crate::scene::{HistogramCube, Irf};
use crate::sum::neumaier;

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    /// Inverse-gamma shape of the uncertainty prior.
    pub alpha: f64,
    /// Inverse-gamma scale of the uncertainty prior, in bins^2.
    pub beta: f64,
    /// Neighbourhood radius `a` of the `(2a+1) x (2a+1)` fusion window.
    pub window_radius: usize,
    pub max_iters: usize,
    /// Stop once the relative L1 change of `x` over a sweep drops below this.
    pub tol: f64,
    /// Number of pyramid scales `L`.
    pub scales: usize,
}

impl FusionConfig {
    /// Defaults: `alpha = 1`, `beta = 2 sigma_g^2`, 3x3 window, `tol = 1e-4`,
    /// 50 sweeps, three scales.
    pub fn for_irf(irf: &Irf) -> Self {
        FusionConfig {
            alpha: 1.0,
            beta: 2.0 * irf.depth_variance(),
            window_radius: 1,
            max_iters: 50,
            tol: 1e-4,
            scales: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("tol", self.tol)?;
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.window_radius == 0 {
            return Err(Error::InvalidConfig("window radius must be at least 1".into()));
        }
        if self.scales == 0 {
            return Err(Error::InvalidConfig("number of scales must be at least 1".into()));
        }
        Ok(())
    }
}

/// Iterate of the fusion loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconState {
    /// Latent depth, bins.
    pub x: Array2<f64>,
    /// Depth variance of `x`, bins^2.
    pub eps: Array2<f64>,
    /// Multiscale depths, `[level, row, col]`.
    pub d: Array3<f64>,
    pub iter: usize,
    /// Negative log posterior at this state.
    pub objective: f64,
}

fn check_shapes(state: &ReconState, weights: &GuidanceWeights) {
    let (levels, h, w, _) = weights.values().dim();
    assert_eq!(state.d.dim(), (levels, h, w), "multiscale depth shape");
    assert_eq!(state.x.dim(), (h, w), "latent depth shape");
    assert_eq!(state.eps.dim(), (h, w), "uncertainty shape");
}

/// Candidate depths and weights entering the prior of pixel `(r, c)`.
fn prior_terms<'a>(
    d: &'a Array3<f64>,
    weights: &'a GuidanceWeights,
    r: usize,
    c: usize,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    let (levels, h, w) = d.dim();
    let k_count = weights.offsets().len();
    (0..levels).flat_map(move |l| {
        (0..k_count).filter_map(move |k| {
            weights
                .neighbour(r, c, k, h, w)
                .map(|(nr, nc)| (d[[l, nr, nc]], weights.get(l, r, c, k)))
        })
    })
}

fn par_map2(h: usize, w: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Array2<f64> {
    let v: Vec<f64> = (0..h * w).into_par_iter().map(|i| f(i / w, i % w)).collect();
    Array2::from_shape_vec((h, w), v).expect("shape")
}

/// Weighted median of the multiscale neighbourhood candidates of every pixel.
/// `eps_n` scales all terms of pixel `n` equally and drops out.
pub fn update_x(state: &ReconState, weights: &GuidanceWeights) -> Array2<f64> {
    check_shapes(state, weights);
    let (h, w) = state.x.dim();
    par_map2(h, w, |r, c| {
        let mut cand: Vec<(f64, f64)> = prior_terms(&state.d, weights, r, c).collect();
        weighted_median(&mut cand).expect("window contains the pixel itself")
    })
}

/// Shrink every multiscale depth towards the latent depths that use it.
pub fn update_d(state: &ReconState, est: &MultiscaleEstimates, weights: &GuidanceWeights) -> Array3<f64> {
    check_shapes(state, weights);
    let (levels, h, w) = state.d.dim();
    let k_count = weights.offsets().len();
    let v: Vec<f64> = (0..levels * h * w)
        .into_par_iter()
        .map(|i| {
            let l = i / (h * w);
            let (r, c) = ((i % (h * w)) / w, i % w);
            let mut couplings: Vec<Coupling> = (0..k_count)
                .filter_map(|k| {
                    let (nr, nc) = weights.neighbour(r, c, k, h, w)?;
                    // Weight of (r, c) inside the window of (nr, nc).
                    let wt = weights.get(l, nr, nc, weights.mirror(k));
                    (wt > 0.0).then(|| Coupling {
                        target: state.x[[nr, nc]],
                        weight: wt / state.eps[[nr, nc]],
                    })
                })
                .collect();
            shrink_solve(est.d_ml[[l, r, c]], est.sigma2[[l, r, c]], &mut couplings)
        })
        .collect();
    Array3::from_shape_vec((levels, h, w), v).expect("shape")
}

/// Weighted absolute residual and number of active prior terms of one pixel.
fn residual(state: &ReconState, weights: &GuidanceWeights, r: usize, c: usize) -> (f64, usize) {
    let xn = state.x[[r, c]];
    let mut terms = 0;
    let s = neumaier(prior_terms(&state.d, weights, r, c).filter(|t| t.1 > 0.0).map(|(v, wt)| {
        terms += 1;
        wt * (xn - v).abs()
    }));
    (s, terms)
}

/// Inverse-gamma mode of every pixel's uncertainty.
pub fn update_eps(state: &ReconState, weights: &GuidanceWeights, config: &FusionConfig) -> Array2<f64> {
    check_shapes(state, weights);
    let (h, w) = state.x.dim();
    par_map2(h, w, |r, c| {
        let (s, m) = residual(state, weights, r, c);
        inverse_gamma_mode(config.alpha, config.beta, s, m)
    })
}

/// Negative log posterior, up to an additive constant.
pub fn negative_log_posterior(
    state: &ReconState,
    est: &MultiscaleEstimates,
    weights: &GuidanceWeights,
    config: &FusionConfig,
) -> f64 {
    check_shapes(state, weights);
    let (h, w) = state.x.dim();
    let data = neumaier(
        state
            .d
            .iter()
            .zip(est.d_ml.iter())
            .zip(est.sigma2.iter())
            .map(|((d, m), v)| (d - m).powi(2) / (2.0 * v)),
    );
    let per_pixel: Vec<f64> = (0..h * w)
        .into_par_iter()
        .map(|i| {
            let (r, c) = (i / w, i % w);
            let xn = state.x[[r, c]];
            let eps = state.eps[[r, c]];
            let laplace = neumaier(
                prior_terms(&state.d, weights, r, c)
                    .filter(|t| t.1 > 0.0)
                    .map(|(v, wt)| wt * (xn - v).abs() / eps + (2.0 * eps / wt).ln()),
            );
            laplace + (config.alpha + 1.0) * eps.ln() + config.beta / eps
        })
        .collect();
    data + neumaier(per_pixel)
}

/// Output of [`reconstruct`] and [`fuse`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub depth: Array2<f64>,
    pub eps: Array2<f64>,
    /// Refined multiscale depths at the final iterate.
    pub multiscale: Array3<f64>,
    /// Sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Objective at initialization and after every block update.
    pub objective_trace: Vec<f64>,
    pub estimates: MultiscaleEstimates,
}

/// Initial state: `d = d_ml`, `eps = beta / (alpha + 1)`, `x` the weighted
/// median of the `d_ml` candidates.
pub fn initial_state(
    est: &MultiscaleEstimates,
    weights: &GuidanceWeights,
    config: &FusionConfig,
) -> ReconState {
    let (_, h, w) = est.d_ml.dim();
    let mut state = ReconState {
        x: Array2::zeros((h, w)),
        eps: Array2::from_elem((h, w), config.beta / (config.alpha + 1.0)),
        d: est.d_ml.clone(),
        iter: 0,
        objective: f64::NAN,
    };
    state.x = update_x(&state, weights);
    state.objective = negative_log_posterior(&state, est, weights, config);
    state
}

/// Run the fusion loop on precomputed multiscale estimates.
pub fn fuse(est: MultiscaleEstimates, config: &FusionConfig) -> Result<Reconstruction> {
    config.validate()?;
    let weights = compute_guidance_weights(&est, config.window_radius)?;
    let mut state = initial_state(&est, &weights, config);
    let mut trace = vec![state.objective];
    let mut converged = false;
    while state.iter < config.max_iters {
        let x_prev = state.x.clone();
        state.x = update_x(&state, &weights);
        trace.push(negative_log_posterior(&state, &est, &weights, config));
        state.d = update_d(&state, &est, &weights);
        trace.push(negative_log_posterior(&state, &est, &weights, config));
        state.eps = update_eps(&state, &weights, config);
        state.objective = negative_log_posterior(&state, &est, &weights, config);
        trace.push(state.objective);
        state.iter += 1;

        // The first sweep's x update sees the initial d and reproduces the
        // initial x, so convergence is only tested from the second sweep on.
        let change = neumaier(state.x.iter().zip(x_prev.iter()).map(|(a, b)| (a - b).abs()));
        let scale = neumaier(x_prev.iter().map(|v| v.abs())).max(f64::MIN_POSITIVE);
        if state.iter > 1 && change / scale < config.tol {
            converged = true;
            break;
        }
    }
    Ok(Reconstruction {
        depth: state.x,
        eps: state.eps,
        multiscale: state.d,
        iterations: state.iter,
        converged,
        objective_trace: trace,
        estimates: est,
    })
}

/// Pyramid, per-scale estimation, guidance weights and the fusion loop.
pub fn reconstruct(cube: &HistogramCube, irf: &Irf, config: &FusionConfig) -> Result<Reconstruction> {
    config.validate()?;
    let pyramid = build_pyramid(cube, config.scales)?;
    let est = estimate_all(&pyramid, irf)?;
    fuse(est, config)
}
