//! Multiscale histogram pyramid.
//!
//! Every level keeps the full `H x W` lattice. Level `l` (1-based) sums the
//! level-1 histograms over a `(2a+1) x (2a+1)` spatial window with
//! `a = 2^(l-1) - 1`, truncated at the image border. Time bins are never mixed.

use ndarray::Array3;

use crate::error::{Error, Result};
use crate::scene::HistogramCube;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiscalePyramid {
    levels: Vec<HistogramCube>,
    radii: Vec<usize>,
}

/// Aggregation radius of the 1-based level `level`.
pub fn scale_radius(level: usize) -> usize {
    debug_assert!(level >= 1);
    (1usize << (level - 1)) - 1
}

impl MultiscalePyramid {
    pub fn levels(&self) -> &[HistogramCube] {
        &self.levels
    }

    /// Level by 0-based index (index 0 is the input cube).
    pub fn level(&self, index: usize) -> &HistogramCube {
        &self.levels[index]
    }

    pub fn scale_radii(&self) -> &[usize] {
        &self.radii
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.levels[0].dim()
    }
}

pub fn build_pyramid(cube: &HistogramCube, num_levels: usize) -> Result<MultiscalePyramid> {
    if num_levels == 0 {
        return Err(Error::InvalidScale("number of scales must be at least 1".into()));
    }
    if num_levels > 16 {
        return Err(Error::InvalidScale(format!("{num_levels} scales is too many")));
    }
    let (h, w, _) = cube.dim();
    let widest = 2 * scale_radius(num_levels) + 1;
    if widest > h.min(w) {
        return Err(Error::InvalidScale(format!(
            "{num_levels} scales need a {widest}x{widest} window but the image is {h}x{w}"
        )));
    }
    let mut levels = Vec::with_capacity(num_levels);
    let mut radii = Vec::with_capacity(num_levels);
    levels.push(cube.clone());
    radii.push(0);
    for level in 2..=num_levels {
        let a = scale_radius(level);
        levels.push(HistogramCube::new(box_sum(cube.counts(), a))?);
        radii.push(a);
    }
    Ok(MultiscalePyramid { levels, radii })
}

/// Separable truncated box sum over rows then columns. Integer addition is
/// exact, so the separable order gives the same result as a direct window sum.
fn box_sum(counts: &Array3<u32>, radius: usize) -> Array3<u32> {
    let (h, w, t) = counts.dim();
    let mut rows = Array3::<u32>::zeros((h, w, t));
    for r in 0..h {
        let lo = r.saturating_sub(radius);
        let hi = (r + radius).min(h - 1);
        for rr in lo..=hi {
            for c in 0..w {
                for b in 0..t {
                    rows[[r, c, b]] += counts[[rr, c, b]];
                }
            }
        }
    }
    let mut out = Array3::<u32>::zeros((h, w, t));
    for r in 0..h {
        for c in 0..w {
            let lo = c.saturating_sub(radius);
            let hi = (c + radius).min(w - 1);
            for cc in lo..=hi {
                for b in 0..t {
                    out[[r, c, b]] += rows[[r, cc, b]];
                }
            }
        }
    }
    out
}
