//! Guidance weights coupling multiscale depths to the latent depth.

use ndarray::{Array3, Array4};

use crate::error::{Error, Result};
use crate::estimate::MultiscaleEstimates;

/// `w[level, row, col, k]`: weight of neighbour `k` of pixel `(row, col)` at
/// `level`, normalized to unit sum over the neighbourhood. Neighbours are the
/// offsets of a `(2a+1) x (2a+1)` square in row-major order; offsets falling
/// outside the image carry weight 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceWeights {
    radius: usize,
    offsets: Vec<(isize, isize)>,
    w: Array4<f64>,
}

impl GuidanceWeights {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn values(&self) -> &Array4<f64> {
        &self.w
    }

    pub fn get(&self, level: usize, row: usize, col: usize, k: usize) -> f64 {
        self.w[[level, row, col, k]]
    }

    /// Index of the offset opposite to `k`, so that
    /// `weight of n' in x_n` at `k` pairs with `weight of n in x_n'` at `mirror(k)`.
    pub fn mirror(&self, k: usize) -> usize {
        self.offsets.len() - 1 - k
    }

    /// Neighbour of `(row, col)` at offset `k`, if inside an `h x w` image.
    pub fn neighbour(&self, row: usize, col: usize, k: usize, h: usize, w: usize) -> Option<(usize, usize)> {
        let (dr, dc) = self.offsets[k];
        let r = row as isize + dr;
        let c = col as isize + dc;
        (r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w).then_some((r as usize, c as usize))
    }

    /// Weights with explicit values, shaped `[level, row, col, (2a+1)^2]`.
    /// Each `(level, row, col)` row must be nonnegative, zero outside the image
    /// and sum to one.
    pub fn from_values(radius: usize, w: Array4<f64>) -> Result<Self> {
        let offsets = square_offsets(radius);
        let (_, h, wd, k) = w.dim();
        if k != offsets.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} neighbours for radius {radius}, got {k}",
                offsets.len()
            )));
        }
        let weights = GuidanceWeights { radius, offsets, w };
        for ((l, r, c), sum) in weights.sums() {
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "weights at level {l}, pixel ({r}, {c}) sum to {sum}"
                )));
            }
        }
        for ((l, r, c, kk), &v) in weights.w.indexed_iter() {
            if !(v >= 0.0 && v.is_finite()) || (v > 0.0 && weights.neighbour(r, c, kk, h, wd).is_none()) {
                return Err(Error::InvalidConfig(format!(
                    "invalid weight {v} at level {l}, pixel ({r}, {c}), neighbour {kk}"
                )));
            }
        }
        Ok(weights)
    }

    fn sums(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        let (levels, h, w, _) = self.w.dim();
        (0..levels).flat_map(move |l| {
            (0..h).flat_map(move |r| {
                (0..w).map(move |c| {
                    let s: f64 = self.w.slice(ndarray::s![l, r, c, ..]).sum();
                    ((l, r, c), s)
                })
            })
        })
    }
}

pub(crate) fn square_offsets(radius: usize) -> Vec<(isize, isize)> {
    let a = radius as isize;
    (-a..=a).flat_map(|dr| (-a..=a).map(move |dc| (dr, dc))).collect()
}

/// `w ∝ exp(-|p_n - p_n'|^2 / (2 a^2)) * s_bar / (s_bar + 1)`, normalized over
/// the truncated window for every (level, pixel). Neighbours without signal
/// get zero weight; if no neighbour has signal the window is weighted
/// uniformly.
pub fn compute_guidance_weights(est: &MultiscaleEstimates, radius: usize) -> Result<GuidanceWeights> {
    if radius == 0 {
        return Err(Error::InvalidConfig("window radius must be at least 1".into()));
    }
    let offsets = square_offsets(radius);
    let (levels, h, w) = est.d_ml.dim();
    let a2 = (radius * radius) as f64;
    let kernel: Vec<f64> = offsets
        .iter()
        .map(|&(dr, dc)| (-((dr * dr + dc * dc) as f64) / (2.0 * a2)).exp())
        .collect();
    let confidence: Array3<f64> = est.s_bar.mapv(|s| s / (s + 1.0));

    let mut weights = GuidanceWeights {
        radius,
        offsets,
        w: Array4::zeros((levels, h, w, kernel.len())),
    };
    for l in 0..levels {
        for r in 0..h {
            for c in 0..w {
                let mut raw = vec![0.0; kernel.len()];
                let mut inside = 0usize;
                for (k, kv) in kernel.iter().enumerate() {
                    if let Some((nr, nc)) = weights.neighbour(r, c, k, h, w) {
                        raw[k] = kv * confidence[[l, nr, nc]];
                        inside += 1;
                    }
                }
                let total: f64 = raw.iter().sum();
                if total > 0.0 {
                    raw.iter_mut().for_each(|v| *v /= total);
                } else {
                    let uniform = 1.0 / inside as f64;
                    for (k, v) in raw.iter_mut().enumerate() {
                        if weights.neighbour(r, c, k, h, w).is_some() {
                            *v = uniform;
                        }
                    }
                }
                for (k, v) in raw.into_iter().enumerate() {
                    weights.w[[l, r, c, k]] = v;
                }
            }
        }
    }
    Ok(weights)
}
