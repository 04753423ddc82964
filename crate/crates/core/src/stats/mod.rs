//! Statistical primitives shared by the metric modules.

mod distance;
mod hypothesis;
pub mod special;

pub use distance::{
    duplicate_overlap, knn_distances, knn_self_distances, normalized_entropy, Standardizer,
    zscores, DuplicateOverlap, KnnOptions, KnnResult,
};
pub use hypothesis::{chi_square_test, ks_test, welch_t_test, TestResult};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the n−1 denominator; NaN for fewer than two values.
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

pub fn sample_std(x: &[f64]) -> f64 {
    sample_variance(x).sqrt()
}

/// Median of a nonempty sample; the mean of the two middle values for even sizes.
pub fn median(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// Nearest-rank quantile: the smallest value with at least `q·n` values at or below it.
pub fn quantile_nearest_rank(x: &[f64], q: f64) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptive() {
        let x = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&x), 5.0);
        assert!((sample_variance(&x) - 32.0 / 7.0).abs() < 1e-12);
        assert_eq!(median(&x), Some(4.5));
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert!(sample_variance(&[1.0]).is_nan());
    }

    #[test]
    fn nearest_rank() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile_nearest_rank(&x, 0.99), Some(99.0));
        assert_eq!(quantile_nearest_rank(&x, 0.995), Some(100.0));
        assert_eq!(quantile_nearest_rank(&x, 0.0), Some(1.0));
    }
}
