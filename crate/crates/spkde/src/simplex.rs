//! Exact Euclidean projection onto the probabilistic simplex.
//!
//! Sort-and-threshold rule: sort descending, find the largest prefix
//! length `rho` with `u_rho - (sum_{i<=rho} u_i - 1)/rho > 0`, set
//! `theta = (sum_{i<=rho} u_i - 1)/rho` and clip `v_i - theta` at zero.
//! O(n log n) with a deterministic sort; chosen over expected-linear
//! pivoting because n stays small here and reproducibility matters more
//! than the constant factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::SIMPLEX_TOL;
use crate::numeric::pairwise_sum;

/// A nonnegative vector summing to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    /// Validate and wrap. Entries must be nonnegative and sum to 1
    /// within 1e-12.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("simplex vector must be nonempty"));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("simplex entries must be nonnegative and finite"));
        }
        let total = pairwise_sum(&values);
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!("simplex entries sum to {total}")));
        }
        Ok(SimplexVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Project `v` onto the simplex: `argmin_{w in simplex} ||w - v||_2`.
///
/// Feasible inputs are returned unchanged, and outputs sum to exactly
/// 1.0 under the crate's pairwise summation, so the projection is
/// idempotent to the bit.
pub fn project_simplex(v: &[f64]) -> Result<SimplexVector> {
    if v.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("cannot project non-finite entries"));
    }
    if v.iter().all(|&x| x >= 0.0) && pairwise_sum(v) == 1.0 {
        return SimplexVector::new(v.to_vec());
    }

    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));

    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }

    let mut w: Vec<f64> = v.iter().map(|&vi| (vi - theta).max(0.0)).collect();

    // Clipping leaves the sum off 1 by a few ulps; nudge the largest
    // coordinate until the pairwise sum is exactly 1.
    for _ in 0..8 {
        let total = pairwise_sum(&w);
        if total == 1.0 {
            break;
        }
        let (imax, _) = w
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let adjusted = w[imax] + (1.0 - total);
        if adjusted == w[imax] || adjusted < 0.0 {
            break;
        }
        w[imax] = adjusted;
    }

    SimplexVector::new(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive active-set oracle: for every nonempty support set,
    /// solve the equality-constrained projection and keep the feasible
    /// candidate with minimal distance.
    pub(crate) fn project_by_enumeration(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        assert!(n <= 20, "oracle is exponential");
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << n) {
            let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let s: f64 = support.iter().map(|&i| v[i]).sum();
            let shift = (s - 1.0) / support.len() as f64;
            let mut w = vec![0.0; n];
            let mut feasible = true;
            for &i in &support {
                w[i] = v[i] - shift;
                if w[i] < -1e-12 {
                    feasible = false;
                    break;
                }
            }
            if !feasible {
                continue;
            }
            for x in w.iter_mut() {
                *x = x.max(0.0);
            }
            let dist: f64 = w.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.as_ref().map_or(true, |(d, _)| dist < *d) {
                best = Some((dist, w));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn point_already_on_simplex_is_fixed() {
        let v = vec![0.2, 0.3, 0.5];
        let w = project_simplex(&v).unwrap();
        assert_eq!(w.as_slice(), v.as_slice());
    }

    #[test]
    fn symmetric_shift() {
        let w = project_simplex(&[0.3, 0.3]).unwrap();
        assert!((w.as_slice()[0] - 0.5).abs() < 1e-15);
        assert!((w.as_slice()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_entry_case_matches_enumeration() {
        // Frozen from the active-set oracle: (0.9, 0.5, -0.2) -> (0.7, 0.3, 0.0).
        let v = [0.9, 0.5, -0.2];
        let oracle = project_by_enumeration(&v);
        assert!((oracle[0] - 0.7).abs() < 1e-12);
        assert!((oracle[1] - 0.3).abs() < 1e-12);
        assert!(oracle[2].abs() < 1e-12);
        let w = project_simplex(&v).unwrap();
        assert!((w.as_slice()[0] - 0.7).abs() < 1e-12);
        assert!((w.as_slice()[1] - 0.3).abs() < 1e-12);
        assert!(w.as_slice()[2].abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(project_simplex(&[]).is_err());
        assert!(project_simplex(&[0.1, f64::NAN]).is_err());
        assert!(project_simplex(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn single_entry() {
        let w = project_simplex(&[-3.7]).unwrap();
        assert_eq!(w.as_slice(), &[1.0]);
    }

    proptest! {
        #[test]
        fn matches_enumeration_oracle(v in proptest::collection::vec(-2.0f64..2.0, 1..=8)) {
            let w = project_simplex(&v).unwrap();
            let oracle = project_by_enumeration(&v);
            for (a, b) in w.as_slice().iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn idempotent(v in proptest::collection::vec(-5.0f64..5.0, 1..=12)) {
            let once = project_simplex(&v).unwrap();
            let twice = project_simplex(once.as_slice()).unwrap();
            prop_assert_eq!(once.as_slice(), twice.as_slice());
        }

        #[test]
        fn translation_invariant(
            v in proptest::collection::vec(-3.0f64..3.0, 1..=10),
            c in -10.0f64..10.0,
        ) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let a = project_simplex(&v).unwrap();
            let b = project_simplex(&shifted).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn optimal_among_random_feasible_points(
            v in proptest::collection::vec(-2.0f64..2.0, 2..=8),
            raw in proptest::collection::vec(0.01f64..1.0, 2..=8),
        ) {
            let n = v.len().min(raw.len());
            let v = &v[..n];
            let total: f64 = raw[..n].iter().sum();
            let w_rand: Vec<f64> = raw[..n].iter().map(|x| x / total).collect();
            let proj = project_simplex(v).unwrap();
            let d_proj: f64 = proj.as_slice().iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            let d_rand: f64 = w_rand.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!(d_proj.sqrt() <= d_rand.sqrt() + 1e-12);
        }
    }
}
