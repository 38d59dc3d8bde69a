//! Scalar minimizers used by the coordinate updates.

const HALF_WEIGHT_SLACK: f64 = 1e-12;

/// Weighted median: sort by value and return the smallest value at which the
/// cumulative weight reaches half the total. It minimizes `sum w |x - v|` and
/// is always one of the inputs; among several minimizers the smallest is
/// returned.
///
/// Entries with zero weight are ignored unless every weight is zero, in which
/// case all entries count equally. Returns `None` for an empty input.
pub fn weighted_median(candidates: &mut [(f64, f64)]) -> Option<f64> {
    if candidates.is_empty() {
        return None;
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = candidates.iter().map(|c| c.1).sum();
    if total <= 0.0 {
        let mid = (candidates.len() - 1) / 2;
        return Some(candidates[mid].0);
    }
    // Exact half-weight ties must survive rounding in the running sum.
    let half = 0.5 * total * (1.0 - HALF_WEIGHT_SLACK);
    let mut cumulative = 0.0;
    for &(value, weight) in candidates.iter() {
        cumulative += weight;
        if cumulative >= half {
            return Some(value);
        }
    }
    // Rounding can leave the running sum a hair short of the total.
    candidates.last().map(|c| c.0)
}

/// One `c |target - d|` term of the shrinkage objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub target: f64,
    pub weight: f64,
}

/// Exact minimizer of
///
/// ```text
/// f(d) = (d - center)^2 / (2 variance) + sum_j weight_j |target_j - d|
/// ```
///
/// `f` is strictly convex and piecewise quadratic with kinks at the targets.
/// Walking the sorted kinks, the first kink whose right derivative is
/// nonnegative brackets the optimum: either the kink itself (the
/// subdifferential contains zero) or the stationary point
/// `center - variance * slope` of the quadratic piece to its left.
///
/// `couplings` is reordered in place.
pub fn shrink_solve(center: f64, variance: f64, couplings: &mut [Coupling]) -> f64 {
    debug_assert!(variance > 0.0);
    couplings.sort_by(|a, b| a.target.total_cmp(&b.target));
    let total: f64 = couplings.iter().map(|c| c.weight).sum();
    // Slope contribution of the absolute-value terms strictly left of the
    // current kink, minus those at or right of it.
    let mut left = 0.0;
    let mut lower = f64::NEG_INFINITY;
    let mut i = 0;
    while i < couplings.len() {
        let kink = couplings[i].target;
        let mut at = 0.0;
        let mut j = i;
        while j < couplings.len() && couplings[j].target == kink {
            at += couplings[j].weight;
            j += 1;
        }
        let right = total - left - at;
        let quad = (kink - center) / variance;
        let derivative_right = quad + left + at - right;
        if derivative_right >= 0.0 {
            let derivative_left = quad + left - at - right;
            if derivative_left <= 0.0 {
                return kink;
            }
            // Optimum lies strictly left of this kink.
            let slope = left - (at + right);
            return (center - variance * slope).clamp(lower, kink);
        }
        left += at;
        lower = kink;
        i = j;
    }
    (center - variance * total).max(lower)
}

/// Soft threshold `sign(u) max(|u| - lambda, 0)`.
pub fn soft_threshold(u: f64, lambda: f64) -> f64 {
    u.signum() * (u.abs() - lambda).max(0.0)
}

/// Mode of the inverse-gamma conditional of one uncertainty value:
/// `(beta + residual) / (alpha + terms + 1)`.
pub fn inverse_gamma_mode(alpha: f64, beta: f64, residual: f64, terms: usize) -> f64 {
    (beta + residual) / (alpha + terms as f64 + 1.0)
}
