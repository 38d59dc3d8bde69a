//! Per-scale maximum-likelihood statistics.
//!
//! For every pixel of every pyramid level this computes the matched-filter
//! depth `d_ml`, the background-corrected signal count `s_bar`, the depth
//! variance `sigma2 = sigma_g^2 / max(s_bar, 1)` and the background estimate.
//! The data-dependent normalizer of the approximate likelihood does not depend
//! on depth or reflectivity and is never evaluated.

use ndarray::Array3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pyramid::MultiscalePyramid;
use crate::scene::Irf;
use crate::sum::neumaier;

/// Result of matched filtering one histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakEstimate {
    /// Depth in bins, `0 <= depth < T`.
    pub depth: f64,
    /// Set when the histogram holds no counts at all.
    pub zero_signal: bool,
}

/// Depth by cross-correlating the histogram with the impulse response.
///
/// The integer shift maximizing `sum_tau y[tau] g[tau - t]` is refined with a
/// three-point parabola. Ties go to the smallest shift.
pub fn matched_filter_depth<C: Copy + Into<f64>>(histogram: &[C], irf: &Irf) -> PeakEstimate {
    let bins = histogram.len();
    if bins == 0 || histogram.iter().all(|&c| c.into() == 0.0) {
        return PeakEstimate {
            depth: 0.0,
            zero_signal: true,
        };
    }
    let y: Vec<f64> = histogram.iter().map(|&c| c.into()).collect();
    let g = irf.samples();
    let corr: Vec<f64> = (0..bins)
        .map(|t| {
            y[t..]
                .iter()
                .zip(g)
                .map(|(yy, gg)| yy * gg)
                .sum::<f64>()
        })
        .collect();

    let mut peak = 0;
    for (t, &c) in corr.iter().enumerate().skip(1) {
        if c > corr[peak] {
            peak = t;
        }
    }

    let mut depth = peak as f64;
    if peak > 0 && peak + 1 < bins {
        let (left, mid, right) = (corr[peak - 1], corr[peak], corr[peak + 1]);
        let curvature = left - 2.0 * mid + right;
        if curvature < 0.0 {
            let offset = (0.5 * (left - right) / curvature).clamp(-0.5, 0.5);
            depth += offset;
        }
    }
    PeakEstimate {
        depth: depth.clamp(0.0, bins as f64 - 1.0),
        zero_signal: false,
    }
}

/// Background rate per bin: the median of the bin counts. The signal return
/// occupies few bins, so the median is background dominated.
pub fn estimate_background<C: Copy + Into<f64>>(histogram: &[C]) -> f64 {
    if histogram.is_empty() {
        return 0.0;
    }
    let mut v: Vec<f64> = histogram.iter().map(|&c| c.into()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Half-width of the peak window, `ceil(3 sigma_g)` bins.
pub fn peak_half_width(irf: &Irf) -> usize {
    (3.0 * irf.rms_width()).ceil() as usize
}

/// Signal count and depth variance around a depth estimate.
///
/// The peak window has half-width `ceil(3 sigma_g)` and is centred on the
/// returned pulse, i.e. on `round(d_ml + centroid(g))`, clipped to the
/// histogram. Returns `(s_bar, sigma2)`.
pub fn signal_stats<C: Copy + Into<f64>>(
    histogram: &[C],
    irf: &Irf,
    d_ml: f64,
    b_hat: f64,
) -> (f64, f64) {
    let bins = histogram.len();
    let half = peak_half_width(irf) as isize;
    let center = (d_ml + irf.centroid()).round() as isize;
    let lo = (center - half).max(0);
    let hi = (center + half).min(bins as isize - 1);
    let s_bar = if lo > hi {
        0.0
    } else {
        let counts = neumaier(histogram[lo as usize..=hi as usize].iter().map(|&c| c.into()));
        let width = (hi - lo + 1) as f64;
        (counts - width * b_hat).max(0.0)
    };
    (s_bar, signal_variance(irf, s_bar))
}

/// `sigma_g^2 / max(s_bar, 1)`.
pub fn signal_variance(irf: &Irf, s_bar: f64) -> f64 {
    irf.depth_variance() / s_bar.max(1.0)
}

/// Mode of the Gamma(1 + s_bar, 1) reflectivity factor.
pub fn reflectivity_mode(s_bar: f64) -> f64 {
    s_bar
}

/// Per-scale statistics on the common pixel lattice, indexed `[level, row, col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleEstimates {
    pub d_ml: Array3<f64>,
    pub s_bar: Array3<f64>,
    pub sigma2: Array3<f64>,
    pub b_hat: Array3<f64>,
    pub bins: usize,
}

impl MultiscaleEstimates {
    pub fn new(
        d_ml: Array3<f64>,
        s_bar: Array3<f64>,
        sigma2: Array3<f64>,
        b_hat: Array3<f64>,
        bins: usize,
    ) -> Result<Self> {
        let dim = d_ml.dim();
        if s_bar.dim() != dim || sigma2.dim() != dim || b_hat.dim() != dim {
            return Err(Error::DimensionMismatch(
                "estimate arrays must share one [level, row, col] shape".into(),
            ));
        }
        if dim.0 == 0 || dim.1 == 0 || dim.2 == 0 {
            return Err(Error::InvalidScale("estimates must be non-empty".into()));
        }
        let t = bins as f64;
        if d_ml.iter().any(|&d| !(d.is_finite() && (0.0..t).contains(&d))) {
            return Err(Error::InvalidConfig(format!("ML depth outside [0, {t})")));
        }
        if s_bar.iter().any(|&s| !(s.is_finite() && s >= 0.0)) {
            return Err(Error::InvalidConfig("signal counts must be nonnegative".into()));
        }
        if sigma2.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::InvalidConfig("depth variances must be positive".into()));
        }
        Ok(MultiscaleEstimates {
            d_ml,
            s_bar,
            sigma2,
            b_hat,
            bins,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.d_ml.dim().0
    }

    pub fn height(&self) -> usize {
        self.d_ml.dim().1
    }

    pub fn width(&self) -> usize {
        self.d_ml.dim().2
    }

    /// Gamma-mode reflectivity for every (level, pixel).
    pub fn reflectivity(&self) -> Array3<f64> {
        self.s_bar.mapv(reflectivity_mode)
    }
}

/// Statistics of a single histogram, with the zero-signal fallback applied.
pub fn estimate_pixel<C: Copy + Into<f64>>(histogram: &[C], irf: &Irf) -> (f64, f64, f64, f64) {
    let peak = matched_filter_depth(histogram, irf);
    if peak.zero_signal {
        return (0.0, 0.0, irf.depth_variance(), 0.0);
    }
    let b_hat = estimate_background(histogram);
    let (s_bar, sigma2) = signal_stats(histogram, irf, peak.depth, b_hat);
    (peak.depth, s_bar, sigma2, b_hat)
}

pub fn estimate_all(pyramid: &MultiscalePyramid, irf: &Irf) -> Result<MultiscaleEstimates> {
    let (h, w, t) = pyramid.dim();
    irf.check_fits(t)?;
    let levels = pyramid.num_levels();
    let per_pixel: Vec<(f64, f64, f64, f64)> = (0..levels * h * w)
        .into_par_iter()
        .map(|idx| {
            let l = idx / (h * w);
            let p = idx % (h * w);
            estimate_pixel(pyramid.level(l).histogram(p / w, p % w), irf)
        })
        .collect();
    let field = |f: fn(&(f64, f64, f64, f64)) -> f64| {
        Array3::from_shape_vec((levels, h, w), per_pixel.iter().map(f).collect()).expect("shape")
    };
    MultiscaleEstimates::new(
        field(|v| v.0),
        field(|v| v.1),
        field(|v| v.2),
        field(|v| v.3),
        t,
    )
}
