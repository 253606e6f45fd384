//! Deterministic summation and small numeric utilities.
//!
//! All reductions in this crate go through [`pairwise_sum`] or
//! [`pairwise_dot`]. The summation tree depends only on the input length,
//! never on thread count, so sequential and parallel builds produce
//! bit-identical results.

const PAIRWISE_LEAF: usize = 64;

/// Pairwise (cascade) summation with a fixed recursion tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Dot product with the same fixed pairwise tree as [`pairwise_sum`].
pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= PAIRWISE_LEAF {
        let mut acc = 0.0;
        for (x, y) in a.iter().zip(b) {
            acc += x * y;
        }
        acc
    } else {
        let mid = a.len() / 2;
        pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
    }
}

/// Squared Euclidean distance between two points of equal dimension.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// `count` logarithmically spaced values on `[lo, hi]`, endpoints included.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && count >= 1);
    if count == 1 {
        return vec![lo];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn pairwise_dot_matches() {
        let a: Vec<f64> = (0..300).map(|i| 1.0 / (i + 1) as f64).collect();
        let b: Vec<f64> = (0..300).map(|i| (i as f64).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((pairwise_dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn logspace_endpoints() {
        let g = logspace(0.01, 3.0, 30);
        assert_eq!(g.len(), 30);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert!((g[29] - 3.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
