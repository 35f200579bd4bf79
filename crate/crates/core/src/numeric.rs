//! Summation helpers.

const BLOCK: usize = 16;

/// Pairwise (cascade) summation. Error grows as O(log n) instead of O(n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(v)` over `values`.
pub fn pairwise_sum_map<T, F>(values: &[T], f: F) -> f64
where
    F: Fn(&T) -> f64 + Copy,
{
    if values.len() <= BLOCK {
        return values.iter().map(f).sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_map(&values[..mid], f) + pairwise_sum_map(&values[mid..], f)
}

/// Mean and unbiased sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = pairwise_sum_map(values, |v| (v - mean) * (v - mean));
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Median; the average of the two middle order statistics for even lengths.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
