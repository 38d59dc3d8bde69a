//! Depth error metrics. Sums use compensated summation in row-major order.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sum::neumaier;

fn check(estimate: &Array2<f64>, reference: &Array2<f64>) -> Result<()> {
    if estimate.dim() != reference.dim() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {}x{} but reference is {}x{}",
            estimate.nrows(),
            estimate.ncols(),
            reference.nrows(),
            reference.ncols()
        )));
    }
    if estimate.is_empty() {
        return Err(Error::DimensionMismatch("maps are empty".into()));
    }
    Ok(())
}

/// Depth absolute error: mean of `|estimate - reference|`.
pub fn dae(estimate: &Array2<f64>, reference: &Array2<f64>) -> Result<f64> {
    check(estimate, reference)?;
    let s = neumaier(estimate.iter().zip(reference.iter()).map(|(a, b)| (a - b).abs()));
    Ok(s / estimate.len() as f64)
}

/// Root mean squared depth error.
pub fn rmse(estimate: &Array2<f64>, reference: &Array2<f64>) -> Result<f64> {
    check(estimate, reference)?;
    let s = neumaier(estimate.iter().zip(reference.iter()).map(|(a, b)| (a - b).powi(2)));
    Ok((s / estimate.len() as f64).sqrt())
}

/// Fraction of pixels whose absolute error exceeds `threshold`.
pub fn outlier_fraction(estimate: &Array2<f64>, reference: &Array2<f64>, threshold: f64) -> Result<f64> {
    check(estimate, reference)?;
    let n = estimate
        .iter()
        .zip(reference.iter())
        .filter(|(a, b)| (*a - *b).abs() > threshold)
        .count();
    Ok(n as f64 / estimate.len() as f64)
}
