//! Robust nonparametric density estimation by scaling and projection.
//!
//! The classic kernel density estimate spreads weight evenly over all
//! samples, so contamination in low-density regions drags the estimate
//! with it. This crate scales the KDE by a robustness factor
//! `beta >= 1` and projects the result, in L2, back onto the convex
//! hull of the kernels centered at the samples. The projection is a
//! simplex-constrained quadratic program over the kernel weights; its
//! infinite-sample limit slices a constant off the bottom of the scaled
//! density, which removes uniform-type contamination exactly.
//!
//! What's here:
//!
//! - [`kernels`]: Gaussian and Cauchy kernels, closed-form Gram
//!   matrices, weighted-estimate evaluation and sampling.
//! - [`simplex`]: exact Euclidean projection onto the probabilistic
//!   simplex.
//! - [`solver`]: the QP and its projected-gradient solver
//!   ([`fit_spkde`], [`fit_kde`]).
//! - [`grid`]: grid-tabulated densities, the infinite-sample slicing /
//!   decontamination transform, and L1/L2 distances.
//! - [`contamination`]: synthetic contaminated samplers, unit-cube
//!   preprocessing, and the rejection-KDE baseline.
//! - [`evaluation`]: KL-divergence estimators, leave-one-out bandwidth
//!   selection, the exact Wilcoxon signed-rank test, and the benchmark
//!   harness.
//!
//! With the default `parallel` feature the dense cell fills (Gram
//! matrix, batched evaluation, grid tabulation) run on rayon; disabling
//! it gives a sequential build that produces bit-identical numbers.

pub mod contamination;
pub mod error;
pub mod evaluation;
pub mod grid;
pub mod kernels;
pub mod numeric;
pub mod simplex;
pub mod solver;

mod exec;

pub use error::{Error, Result};
pub use kernels::{
    estimate_eval, estimate_sample, gram_matrix, kernel_eval, GramMatrix, KernelFamily,
    KernelSpec, Points, WeightedDensityEstimate,
};
pub use simplex::{project_simplex, SimplexVector};
pub use solver::{
    build_qp, fit_kde, fit_spkde, solve_pgd, QpProblem, SolveOptions, SolveReport, SpkdeFit,
};
