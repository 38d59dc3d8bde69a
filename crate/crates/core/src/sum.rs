/// Compensated (Neumaier) summation. Order-dependent but deterministic, and
/// accurate enough that objective differences of 1e-9 remain meaningful on
/// sums with ~1e5 terms.
pub(crate) fn neumaier<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
