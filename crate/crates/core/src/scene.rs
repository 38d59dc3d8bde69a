//! Ground-truth scenes, impulse responses and Poisson histogram simulation.
//!
//! Observation model: each bin `t` of pixel `n` receives an independent
//! Poisson count with rate `r_n * g(t - d_n) + b_n`, where `g` is the unit-sum
//! impulse response evaluated with linear interpolation at fractional shifts
//! and `b_n` is a per-pixel background rate that is constant over time.
//!
//! Reproducibility: every pixel draws from its own ChaCha8 stream, seeded
//! with the user seed and selected by the row-major pixel index, so cubes are
//! identical across platforms and thread counts.

use ndarray::{Array2, Array3, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sum::neumaier;

/// Quantization variance of a single bin (uniform over one bin width).
/// Used as a floor so a delta-like response never yields zero variance.
pub const BIN_QUANTIZATION_VARIANCE: f64 = 1.0 / 12.0;

/// Ground-truth scene on an `H x W` lattice observed over `T` time bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// True depth in time-bin units, `0 <= d < T`.
    pub depth: Array2<f64>,
    /// Expected signal photon count per pixel (unit-sum impulse response).
    pub reflectivity: Array2<f64>,
    /// Background photons per bin, constant over time.
    pub background: Array2<f64>,
    pub bins: usize,
}

impl Scene {
    pub fn new(
        depth: Array2<f64>,
        reflectivity: Array2<f64>,
        background: Array2<f64>,
        bins: usize,
    ) -> Result<Self> {
        let scene = Scene {
            depth,
            reflectivity,
            background,
            bins,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Scene with uniform unit reflectivity and no background.
    pub fn from_depth(depth: Array2<f64>, bins: usize) -> Result<Self> {
        let dim = depth.raw_dim();
        Self::new(depth, Array2::ones(dim), Array2::zeros(dim), bins)
    }

    pub fn validate(&self) -> Result<()> {
        let (h, w) = self.depth.dim();
        if h == 0 || w == 0 || self.bins == 0 {
            return Err(Error::InvalidScene(format!(
                "dimensions must be positive, got {h}x{w}x{}",
                self.bins
            )));
        }
        if self.reflectivity.dim() != (h, w) || self.background.dim() != (h, w) {
            return Err(Error::InvalidScene(
                "depth, reflectivity and background maps differ in shape".into(),
            ));
        }
        let t = self.bins as f64;
        if let Some(d) = self
            .depth
            .iter()
            .find(|&&d| !(d.is_finite() && (0.0..t).contains(&d)))
        {
            return Err(Error::InvalidScene(format!("depth {d} outside [0, {t})")));
        }
        for (name, map) in [
            ("reflectivity", &self.reflectivity),
            ("background", &self.background),
        ] {
            if let Some(v) = map.iter().find(|&&v| !(v.is_finite() && v >= 0.0)) {
                return Err(Error::InvalidScene(format!("{name} value {v} is negative")));
            }
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.depth.nrows()
    }

    pub fn width(&self) -> usize {
        self.depth.ncols()
    }

    /// Average photons per pixel: `(1/N) * sum(r_n + b_n T)`.
    pub fn ppp(&self) -> f64 {
        let t = self.bins as f64;
        let n = self.depth.len() as f64;
        neumaier(
            self.reflectivity
                .iter()
                .zip(self.background.iter())
                .map(|(r, b)| r + b * t),
        ) / n
    }

    /// Signal-to-background ratio: `sum(r_n) / sum(b_n T)`.
    pub fn sbr(&self) -> f64 {
        let t = self.bins as f64;
        let signal = neumaier(self.reflectivity.iter().copied());
        let background = neumaier(self.background.iter().map(|b| b * t));
        signal / background
    }
}

/// Discretized system impulse response, normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Irf {
    samples: Vec<f64>,
    centroid: f64,
    rms_width: f64,
}

impl Irf {
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidIrf("no samples".into()));
        }
        if let Some(v) = samples.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidIrf(format!("sample {v} is negative or not finite")));
        }
        let total = neumaier(samples.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidIrf("samples sum to zero".into()));
        }
        let samples: Vec<f64> = samples.into_iter().map(|v| v / total).collect();
        let centroid = neumaier(samples.iter().enumerate().map(|(i, g)| i as f64 * g));
        let var = neumaier(
            samples
                .iter()
                .enumerate()
                .map(|(i, g)| g * (i as f64 - centroid).powi(2)),
        );
        Ok(Irf {
            samples,
            centroid,
            rms_width: var.max(0.0).sqrt(),
        })
    }

    /// Sampled Gaussian pulse with standard deviation `sigma` bins, truncated
    /// at +-4 sigma. The pulse starts at index 0, so its centroid sits at
    /// `ceil(4 sigma)`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidIrf(format!("gaussian sigma {sigma} must be positive")));
        }
        let half = (4.0 * sigma).ceil() as usize;
        let samples = (0..=2 * half)
            .map(|i| {
                let u = i as f64 - half as f64;
                (-0.5 * u * u / (sigma * sigma)).exp()
            })
            .collect();
        Self::from_samples(samples)
    }

    /// Single-bin response.
    pub fn delta() -> Self {
        Irf {
            samples: vec![1.0],
            centroid: 0.0,
            rms_width: 0.0,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Discrete centroid of `g` in bins.
    pub fn centroid(&self) -> f64 {
        self.centroid
    }

    /// Discrete RMS width of `g` about its centroid, in bins.
    pub fn rms_width(&self) -> f64 {
        self.rms_width
    }

    /// `rms_width^2`, floored at the single-bin quantization variance.
    pub fn depth_variance(&self) -> f64 {
        (self.rms_width * self.rms_width).max(BIN_QUANTIZATION_VARIANCE)
    }

    /// `g(u)` with linear interpolation between samples and zero outside the
    /// support `[0, len - 1]`.
    pub fn eval(&self, u: f64) -> f64 {
        let last = (self.samples.len() - 1) as f64;
        if !(0.0..=last).contains(&u) {
            return 0.0;
        }
        let i = u.floor() as usize;
        let frac = u - i as f64;
        if frac == 0.0 || i + 1 >= self.samples.len() {
            self.samples[i]
        } else {
            self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
        }
    }

    pub(crate) fn check_fits(&self, bins: usize) -> Result<()> {
        if self.samples.len() > bins {
            return Err(Error::InvalidIrf(format!(
                "impulse response has {} samples but histograms have only {bins} bins",
                self.samples.len()
            )));
        }
        Ok(())
    }
}

/// `H x W x T` photon counts, bin index fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramCube {
    counts: Array3<u32>,
}

impl HistogramCube {
    pub fn new(counts: Array3<u32>) -> Result<Self> {
        let (h, w, t) = counts.dim();
        if h == 0 || w == 0 || t == 0 {
            return Err(Error::InvalidScene(format!(
                "cube dimensions must be positive, got {h}x{w}x{t}"
            )));
        }
        // Keep standard layout so per-pixel histograms are contiguous slices.
        let counts = if counts.is_standard_layout() {
            counts
        } else {
            counts.as_standard_layout().into_owned()
        };
        Ok(HistogramCube { counts })
    }

    pub fn zeros(height: usize, width: usize, bins: usize) -> Result<Self> {
        Self::new(Array3::zeros((height, width, bins)))
    }

    pub fn counts(&self) -> &Array3<u32> {
        &self.counts
    }

    pub fn into_counts(self) -> Array3<u32> {
        self.counts
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.counts.dim()
    }

    pub fn height(&self) -> usize {
        self.counts.dim().0
    }

    pub fn width(&self) -> usize {
        self.counts.dim().1
    }

    pub fn bins(&self) -> usize {
        self.counts.dim().2
    }

    pub fn histogram(&self, row: usize, col: usize) -> &[u32] {
        let t = self.bins();
        let start = (row * self.width() + col) * t;
        &self.counts.as_slice().expect("standard layout")[start..start + t]
    }

    pub fn histogram_view(&self, row: usize, col: usize) -> ArrayView1<'_, u32> {
        self.counts.slice(ndarray::s![row, col, ..])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Rescale reflectivity by one common factor and replace background by a
/// uniform level so that the scene's PPP and SBR equal the targets.
///
/// Mean signal per pixel becomes `ppp * sbr / (1 + sbr)` and the background
/// rate `ppp / ((1 + sbr) T)`.
pub fn calibrate_levels(scene: &Scene, ppp: f64, sbr: f64) -> Result<Scene> {
    scene.validate()?;
    if !(ppp.is_finite() && ppp > 0.0) {
        return Err(Error::InvalidTarget(format!("ppp {ppp} must be positive")));
    }
    if !(sbr.is_finite() && sbr > 0.0) {
        return Err(Error::InvalidTarget(format!("sbr {sbr} must be positive")));
    }
    let mean_r = neumaier(scene.reflectivity.iter().copied()) / scene.reflectivity.len() as f64;
    if mean_r <= 0.0 {
        return Err(Error::CalibrationImpossible);
    }
    let signal = ppp * sbr / (1.0 + sbr);
    let b = ppp / ((1.0 + sbr) * scene.bins as f64);
    let scale = signal / mean_r;
    Ok(Scene {
        depth: scene.depth.clone(),
        reflectivity: scene.reflectivity.mapv(|r| r * scale),
        background: Array2::from_elem(scene.depth.raw_dim(), b),
        bins: scene.bins,
    })
}

/// Expected count in every bin of one pixel.
pub fn expected_histogram(reflectivity: f64, depth: f64, background: f64, irf: &Irf, bins: usize) -> Vec<f64> {
    (0..bins)
        .map(|t| reflectivity * irf.eval(t as f64 - depth) + background)
        .collect()
}

/// Draw a Poisson histogram cube from the scene.
pub fn simulate(scene: &Scene, irf: &Irf, seed: u64) -> Result<HistogramCube> {
    scene.validate()?;
    irf.check_fits(scene.bins)?;
    let (h, w) = scene.depth.dim();
    let t = scene.bins;
    let pixels: Vec<Vec<u32>> = (0..h * w)
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / w, idx % w);
            let rates = expected_histogram(
                scene.reflectivity[[row, col]],
                scene.depth[[row, col]],
                scene.background[[row, col]],
                irf,
                t,
            );
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            rates
                .into_iter()
                .map(|rate| {
                    if rate > 0.0 {
                        let draw: f64 = Poisson::new(rate)
                            .expect("finite positive rate")
                            .sample(&mut rng);
                        draw as u32
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    let flat: Vec<u32> = pixels.into_iter().flatten().collect();
    HistogramCube::new(Array3::from_shape_vec((h, w, t), flat).expect("shape matches"))
}

/// Built-in synthetic depth layouts. All depths lie well inside `[0, T)`
/// so a pulse of moderate width fits after the return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Synthetic {
    /// Two planes split vertically at the middle column.
    Step,
    /// Four planes of increasing depth across the columns.
    Staircase,
    /// A hemisphere in front of a back plane.
    Sphere,
}

impl Synthetic {
    pub fn depth_map(self, height: usize, width: usize, bins: usize) -> Array2<f64> {
        let t = bins as f64;
        match self {
            Synthetic::Step => Array2::from_shape_fn((height, width), |(_, c)| {
                if c < width / 2 {
                    0.35 * t + 0.3
                } else {
                    0.55 * t + 0.7
                }
            }),
            Synthetic::Staircase => {
                let steps = 4usize;
                Array2::from_shape_fn((height, width), |(_, c)| {
                    let k = (c * steps / width.max(1)).min(steps - 1) as f64;
                    (0.25 + 0.1 * k) * t + 0.4
                })
            }
            Synthetic::Sphere => {
                let cy = (height as f64 - 1.0) / 2.0;
                let cx = (width as f64 - 1.0) / 2.0;
                let radius = height.min(width) as f64 / 3.0;
                let back = 0.6 * t;
                Array2::from_shape_fn((height, width), |(r, c)| {
                    let rho2 = (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2);
                    if rho2 < radius * radius {
                        back - 0.25 * t * (1.0 - rho2 / (radius * radius)).sqrt()
                    } else {
                        back
                    }
                })
            }
        }
    }

    pub fn scene(self, height: usize, width: usize, bins: usize) -> Result<Scene> {
        Scene::from_depth(self.depth_map(height, width, bins), bins)
    }
}
