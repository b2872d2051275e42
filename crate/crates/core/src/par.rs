//! Data-parallel helpers with a sequential fallback.
//!
//! With the default `parallel` feature the indexed maps fan out over rayon;
//! without it they run serially. Results are collected in index order and
//! reduced by pairwise summation, so sums are bit-identical for any thread
//! count and for both execution modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, preserving index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Sync + Send + Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, preserving index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Sequential reference implementation, kept available in all builds so the
/// bench suite can compare both paths side by side.
pub fn map_indexed_seq<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Pairwise (cascade) summation: deterministic and far more accurate than a
/// left fold on long quadrature vectors.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Fallible indexed map-sum used by the quadrature drivers.
pub fn try_map_sum<E, F>(n: usize, f: F) -> Result<f64, E>
where
    E: Send,
    F: Sync + Send + Fn(usize) -> Result<f64, E>,
{
    let vals = map_indexed(n, f);
    let mut out = Vec::with_capacity(n);
    for v in vals {
        out.push(v?);
    }
    Ok(pairwise_sum(&out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_on_small_input() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(pairwise_sum(&xs), 15.0);
    }

    #[test]
    fn parallel_and_seq_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.1).sin() / (1.0 + i as f64);
        let a = map_indexed(1000, f);
        let b = map_indexed_seq(1000, f);
        assert_eq!(a, b);
        assert_eq!(pairwise_sum(&a).to_bits(), pairwise_sum(&b).to_bits());
    }
}
