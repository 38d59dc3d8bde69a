//! Single-photon Lidar toolkit.
//!
//! The crate covers the whole measurement-to-depth chain of a time-correlated
//! single-photon counting (TCSPC) Lidar:
//!
//! - [`scene`]: ground-truth scenes, impulse responses and a Poisson histogram
//!   simulator calibrated to a target photons-per-pixel (PPP) and
//!   signal-to-background ratio (SBR).
//! - [`pyramid`]: same-lattice spatial aggregation of histograms into `L` scales.
//! - [`estimate`]: per-scale matched-filter depths, signal counts and depth
//!   variances.
//! - [`fusion`]: the iterative multiscale Bayesian fusion that returns a single
//!   depth map and a per-pixel uncertainty map.
//! - [`io`] and [`metrics`]: binary cube/depth-map formats, PLY export, PGM
//!   scene input and depth error metrics.

pub mod error;
pub mod estimate;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod pyramid;
pub mod scene;
pub(crate) mod sum;

pub use error::{Error, Result};
pub use estimate::{estimate_all, MultiscaleEstimates};
pub use fusion::{reconstruct, FusionConfig, GuidanceWeights, ReconState, Reconstruction};
pub use pyramid::{build_pyramid, MultiscalePyramid};
pub use scene::{calibrate_levels, simulate, HistogramCube, Irf, Scene};
