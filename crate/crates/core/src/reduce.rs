//! Reductions whose result does not depend on the rayon thread count.
//!
//! Values are first materialised in input order, then combined with a fixed
//! pairwise tree. The tree shape depends only on the slice length, so the
//! floating-point rounding is identical for any pool size.

use std::ops::Add;

const LEAF: usize = 32;

/// Sum `values` with a fixed-shape pairwise tree.
pub fn pairwise_sum<T>(values: &[T]) -> T
where
    T: Copy + Add<Output = T> + Default + Send + Sync,
{
    if values.len() <= LEAF {
        return values.iter().fold(T::default(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    let (lo, hi) = values.split_at(mid);
    let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
    a + b
}

/// Fixed-tree reduction with an arbitrary associative `op`.
pub fn pairwise_reduce<T, F>(values: &[T], zero: T, op: &F) -> T
where
    T: Copy + Send + Sync,
    F: Fn(T, T) -> T + Sync,
{
    if values.len() <= LEAF {
        return values.iter().fold(zero, |acc, &v| op(acc, v));
    }
    let mid = values.len() / 2;
    let (lo, hi) = values.split_at(mid);
    let (a, b) = rayon::join(|| pairwise_reduce(lo, zero, op), || pairwise_reduce(hi, zero, op));
    op(a, b)
}

/// Mean of `values` using [`pairwise_sum`]. Returns 0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Population variance around [`mean`].
pub fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    pairwise_sum(&sq) / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_matches_across_pool_sizes() {
        let values: Vec<f64> = (0..10_007).map(|i| ((i as f64) * 0.37).sin() * 1e3).collect();
        let sums: Vec<u64> = [1, 2, 3, 8]
            .iter()
            .map(|&n| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
                pool.install(|| pairwise_sum(&values)).to_bits()
            })
            .collect();
        assert!(sums.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn empty_and_small() {
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
        assert_eq!(mean(&[]), 0.0);
        assert!((variance(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
