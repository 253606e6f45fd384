//! Radial smoothing kernels, closed-form Gram matrices, and weighted
//! kernel density estimates.
//!
//! A kernel `k_sigma(x, x') = sigma^-d q(||x - x'|| / sigma)` is determined
//! by its family, dimension and bandwidth. Only the Gaussian and Cauchy
//! families are supported: both have closed-form L2 inner products, which
//! is what makes the projection QP tractable without numerical
//! integration. The Gram entry is itself a kernel evaluation at an
//! inflated bandwidth: `sqrt(2) * sigma` for Gaussian, `2 * sigma` for
//! Cauchy.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::numeric::sq_dist;

/// Kernel family. Both members admit a closed-form Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Cauchy,
}

impl KernelFamily {
    /// Whether the pairwise L2 inner product has a closed form.
    ///
    /// Always true today; new families must either provide one or be
    /// rejected by [`gram_matrix`] rather than silently fall back to
    /// quadrature.
    pub fn has_closed_form_gram(self) -> bool {
        match self {
            KernelFamily::Gaussian | KernelFamily::Cauchy => true,
        }
    }
}

/// A radial kernel: family, dimension `d >= 1`, bandwidth `sigma > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub dim: usize,
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize, bandwidth: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("kernel dimension must be >= 1"));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(KernelSpec { family, dim, bandwidth })
    }

    pub fn gaussian(dim: usize, bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, dim, bandwidth)
    }

    pub fn cauchy(dim: usize, bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Cauchy, dim, bandwidth)
    }

    /// Same kernel at a different bandwidth.
    pub fn with_bandwidth(self, bandwidth: f64) -> Result<Self> {
        Self::new(self.family, self.dim, bandwidth)
    }

    /// Kernel value at squared distance `r2`, skipping dimension checks.
    #[inline]
    pub(crate) fn eval_sq_dist(&self, r2: f64) -> f64 {
        let d = self.dim as f64;
        let s = self.bandwidth;
        match self.family {
            KernelFamily::Gaussian => {
                let norm = (2.0 * std::f64::consts::PI * s * s).powf(-d / 2.0);
                norm * (-r2 / (2.0 * s * s)).exp()
            }
            KernelFamily::Cauchy => {
                let norm = gamma_half_integer(1 + self.dim)
                    / (std::f64::consts::PI.powf((d + 1.0) / 2.0) * s.powf(d));
                norm * (1.0 + r2 / (s * s)).powf(-(1.0 + d) / 2.0)
            }
        }
    }
}

/// `Gamma(n/2)` by the half-integer recurrence; exact up to rounding.
fn gamma_half_integer(n: usize) -> f64 {
    debug_assert!(n >= 1);
    let mut z = if n % 2 == 0 { 1.0 } else { 0.5 };
    let mut g = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    while 2.0 * z < n as f64 {
        g *= z;
        z += 1.0;
    }
    g
}

/// Evaluate `k_sigma(x, y)`. Symmetric and strictly positive.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: x.len() });
    }
    if y.len() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: y.len() });
    }
    Ok(spec.eval_sq_dist(sq_dist(x, y)))
}

/// An `n x d` sample matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be >= 1"));
        }
        if data.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "flat data length {} is not a multiple of dim {}",
                data.len(),
                dim
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("points contain non-finite values"));
        }
        Ok(Points { data, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::invalid("need at least one nonempty row"));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Points::from_flat(data, dim)
    }

    /// 1-D convenience constructor.
    pub fn from_1d(xs: &[f64]) -> Result<Self> {
        Points::from_flat(xs.to_vec(), 1)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// Dense symmetric PSD Gram matrix `G_ij = <k(., X_i), k(., X_j)>_L2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    n: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `G v` with a fixed per-row reduction order.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        exec::map_indexed(self.n, |i| crate::numeric::pairwise_dot(self.row(i), v))
    }

    /// Largest eigenvalue estimated by `steps` power iterations.
    ///
    /// For a PSD matrix the Rayleigh quotient converges from below; the
    /// diagonal maximum is a lower bound taken as a floor.
    pub fn lambda_max_power_iteration(&self, steps: usize) -> f64 {
        let n = self.n;
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda = 0.0;
        for _ in 0..steps {
            let w = self.matvec(&v);
            let norm = crate::numeric::pairwise_dot(&w, &w).sqrt();
            if norm == 0.0 || !norm.is_finite() {
                break;
            }
            lambda = crate::numeric::pairwise_dot(&v, &w);
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / norm;
            }
        }
        let diag_max = (0..n).map(|i| self.get(i, i)).fold(0.0, f64::max);
        lambda.max(diag_max)
    }
}

/// Bandwidth carrying the closed-form Gram inflation for `family`.
fn gram_bandwidth(spec: &KernelSpec) -> Result<KernelSpec> {
    if !spec.family.has_closed_form_gram() {
        return Err(Error::Unsupported(format!(
            "no closed-form Gram entries for {:?} kernels",
            spec.family
        )));
    }
    let inflated = match spec.family {
        KernelFamily::Gaussian => std::f64::consts::SQRT_2 * spec.bandwidth,
        KernelFamily::Cauchy => 2.0 * spec.bandwidth,
    };
    spec.with_bandwidth(inflated)
}

/// Closed-form Gram matrix of the kernels centered at `points`.
///
/// The upper triangle is computed cell by cell and mirrored, so the
/// result is symmetric to the bit and independent of thread count.
pub fn gram_matrix(points: &Points, spec: &KernelSpec) -> Result<GramMatrix> {
    if points.dim() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: points.dim() });
    }
    if points.is_empty() {
        return Err(Error::invalid("gram_matrix needs at least one point"));
    }
    let inflated = gram_bandwidth(spec)?;
    let n = points.len();
    let mut data = vec![0.0; n * n];
    exec::for_each_row(&mut data, n, |i, row| {
        let xi = points.row(i);
        for (j, slot) in row.iter_mut().enumerate().skip(i) {
            *slot = inflated.eval_sq_dist(sq_dist(xi, points.row(j)));
        }
    });
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    Ok(GramMatrix { n, data })
}

/// A weighted kernel density estimate `sum_i a_i k_sigma(., X_i)` with the
/// weight vector constrained to the probabilistic simplex.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightedDensityEstimate {
    points: Points,
    weights: Vec<f64>,
    kernel: KernelSpec,
}

pub(crate) const SIMPLEX_TOL: f64 = 1e-12;

impl WeightedDensityEstimate {
    pub fn new(points: Points, weights: Vec<f64>, kernel: KernelSpec) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("estimate needs at least one point"));
        }
        if points.dim() != kernel.dim {
            return Err(Error::DimensionMismatch { expected: kernel.dim, got: points.dim() });
        }
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: weights.len() });
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be nonnegative and finite"));
        }
        let total = crate::numeric::pairwise_sum(&weights);
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(WeightedDensityEstimate { points, weights, kernel })
    }

    /// Classic KDE weights `1/n`.
    pub fn uniform(points: Points, kernel: KernelSpec) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::invalid("estimate needs at least one point"));
        }
        // n * (1/n) can be off by an ulp; patch the last weight so the
        // simplex invariant holds exactly.
        let mut weights = vec![1.0 / n as f64; n];
        let sum: f64 = crate::numeric::pairwise_sum(&weights);
        let last = weights.len() - 1;
        weights[last] += 1.0 - sum;
        WeightedDensityEstimate::new(points, weights, kernel)
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim
    }

    /// Density value at a single query point.
    pub fn eval_one(&self, q: &[f64]) -> Result<f64> {
        if q.len() != self.kernel.dim {
            return Err(Error::DimensionMismatch { expected: self.kernel.dim, got: q.len() });
        }
        Ok(self.eval_unchecked(q))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, q: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (xi, &ai) in self.points.rows().zip(&self.weights) {
            acc += ai * self.kernel.eval_sq_dist(sq_dist(q, xi));
        }
        acc
    }
}

/// Evaluate the estimate at each row of `queries`, in parallel over rows.
pub fn estimate_eval(est: &WeightedDensityEstimate, queries: &Points) -> Result<Vec<f64>> {
    if queries.dim() != est.kernel.dim {
        return Err(Error::DimensionMismatch { expected: est.kernel.dim, got: queries.dim() });
    }
    Ok(exec::map_indexed(queries.len(), |i| est.eval_unchecked(queries.row(i))))
}

/// Draw `m` i.i.d. samples from the mixture the estimate represents.
///
/// Component `i` is chosen with probability `a_i`; the offset is Gaussian
/// with per-axis std `sigma`, or for the Cauchy family a Gaussian draw
/// divided by `sqrt(chi^2_1)` (the elliptical representation of the
/// multivariate Cauchy).
pub fn estimate_sample(est: &WeightedDensityEstimate, m: usize, seed: u64) -> Result<Points> {
    let d = est.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(m * d);
    if m > 0 {
        let index = WeightedIndex::new(est.weights())
            .map_err(|e| Error::invalid(format!("bad mixture weights: {e}")))?;
        let chi1 = ChiSquared::new(1.0).expect("k=1 is valid");
        let sigma = est.kernel.bandwidth;
        for _ in 0..m {
            let comp = est.points.row(index.sample(&mut rng));
            let scale = match est.kernel.family {
                KernelFamily::Gaussian => sigma,
                KernelFamily::Cauchy => {
                    let w: f64 = chi1.sample(&mut rng);
                    sigma / w.sqrt()
                }
            };
            for &c in comp {
                let z: f64 = rng.sample(StandardNormal);
                data.push(c + scale * z);
            }
        }
    }
    Points::from_flat(data, d)
}
