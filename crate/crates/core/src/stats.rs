//! Per-column summary statistics shared by the spectral and similarity
//! modules. The standard deviation uses the n−1 divisor throughout.

use ndarray::ArrayView2;

use crate::Real;

/// Column means and sample standard deviations (divisor n−1).
///
/// With fewer than two rows the deviations are all zero.
pub(crate) fn column_mean_std<T: Real>(values: ArrayView2<'_, T>) -> (Vec<T>, Vec<T>) {
    let (n, m) = values.dim();
    let mut mean = vec![T::zero(); m];
    let mut std = vec![T::zero(); m];
    if n == 0 {
        return (mean, std);
    }
    let n_t = T::from_usize(n).unwrap();
    for j in 0..m {
        let mut sum = T::zero();
        for i in 0..n {
            sum += values[[i, j]];
        }
        mean[j] = sum / n_t;
    }
    if n < 2 {
        return (mean, std);
    }
    let denom = T::from_usize(n - 1).unwrap();
    for j in 0..m {
        let mut ss = T::zero();
        for i in 0..n {
            let d = values[[i, j]] - mean[j];
            ss += d * d;
        }
        std[j] = (ss / denom).sqrt();
    }
    (mean, std)
}
