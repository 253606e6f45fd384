//! The scaled-projection estimator: quadratic program construction and
//! the projected gradient solver.
//!
//! Scaling the classic KDE by `beta >= 1` and projecting back onto the
//! convex hull of the kernels in L2 reduces, in weight coordinates, to
//!
//! ```text
//!     min_{a in simplex}  a' G a - 2 b' a,      b = G 1 beta / n
//! ```
//!
//! with `G` the kernel Gram matrix. The solver iterates
//! `a <- project_simplex(a - eta * 2(Ga - b))` with the fixed step
//! `eta = 1 / (2 lambda_max(G))`, which keeps the objective monotone for
//! a PSD `G` without backtracking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, GramMatrix, KernelSpec, Points, WeightedDensityEstimate};
use crate::numeric::{pairwise_dot, pairwise_sum};
use crate::simplex::{project_simplex, SimplexVector};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50_000;

/// Power-iteration steps for estimating `lambda_max(G)`.
const POWER_ITER_STEPS: usize = 100;

/// Consecutive small relative decreases required by the stopping rule.
const STALL_STEPS: usize = 5;

/// Slack allowed on the per-step monotonicity of the objective.
const MONOTONE_SLACK: f64 = 1e-12;

/// The simplex-constrained QP `min a'Ga - 2b'a` with `b = G 1 beta / n`.
#[derive(Clone, Debug)]
pub struct QpProblem {
    gram: GramMatrix,
    linear: Vec<f64>,
    beta: f64,
}

impl QpProblem {
    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> usize {
        self.gram.n()
    }

    /// Objective `a'Ga - 2b'a` given a precomputed `Ga`.
    fn objective_with(&self, a: &[f64], ga: &[f64]) -> f64 {
        pairwise_dot(a, ga) - 2.0 * pairwise_dot(&self.linear, a)
    }

    pub fn objective(&self, a: &[f64]) -> f64 {
        let ga = self.gram.matvec(a);
        self.objective_with(a, &ga)
    }
}

/// Solver diagnostics. `weights` is the terminal iterate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub weights: SimplexVector,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub initial: Option<SimplexVector>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, initial: None }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolveOptions { tol, ..Default::default() }
    }
}

/// Assemble the QP for `points` under `spec` with robustness scale `beta`.
pub fn build_qp(points: &Points, spec: &KernelSpec, beta: f64) -> Result<QpProblem> {
    if !(beta >= 1.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta must be >= 1, got {beta}")));
    }
    let gram = gram_matrix(points, spec)?;
    let n = gram.n();
    let ones = vec![1.0; n];
    let mut linear = gram.matvec(&ones);
    let scale = beta / n as f64;
    for b in linear.iter_mut() {
        *b *= scale;
    }
    Ok(QpProblem { gram, linear, beta })
}

/// Exact sum-to-one uniform vector, the beta = 1 solution and default
/// warm start.
fn uniform_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0 / n as f64; n];
    let sum = pairwise_sum(&w);
    let last = n - 1;
    w[last] += 1.0 - sum;
    w
}

/// Projected gradient descent on the simplex.
///
/// Stops when the relative objective decrease stays below `tol` for 5
/// consecutive iterations or the iterate displacement drops below
/// `tol * eta`, and the terminal KKT residual is within `10 * tol`; the
/// residual gate keeps a premature stall from being reported as
/// convergence.
pub fn solve_pgd(problem: &QpProblem, opts: &SolveOptions) -> Result<SolveReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    if opts.max_iter == 0 {
        return Err(Error::invalid("max_iter must be >= 1"));
    }
    let n = problem.n();
    let mut a = match &opts.initial {
        Some(w) => {
            if w.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: w.len() });
            }
            w.as_slice().to_vec()
        }
        None => uniform_weights(n),
    };

    let lambda = problem.gram.lambda_max_power_iteration(POWER_ITER_STEPS);
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::numeric(format!("lambda_max estimate {lambda} is unusable")));
    }
    let eta = 1.0 / (2.0 * lambda);

    let mut ga = problem.gram.matvec(&a);
    let mut obj = problem.objective_with(&a, &ga);
    let mut trace = Vec::with_capacity(64);
    trace.push(obj);

    let mut kkt = kkt_residual(problem, &a, &ga);
    let mut converged = false;
    let mut iterations = 0;
    let mut stall = 0;

    for _ in 0..opts.max_iter {
        let step: Vec<f64> = a
            .iter()
            .zip(&ga)
            .zip(&problem.linear)
            .map(|((&ai, &gai), &bi)| ai - eta * 2.0 * (gai - bi))
            .collect();
        let next = project_simplex(&step)?.into_vec();

        let ga_next = problem.gram.matvec(&next);
        let obj_next = problem.objective_with(&next, &ga_next);
        iterations += 1;

        if obj_next > obj + MONOTONE_SLACK {
            return Err(Error::numeric(format!(
                "objective increased by {} at iteration {iterations}; Gram matrix \
                 appears indefinite",
                obj_next - obj
            )));
        }
        trace.push(obj_next);

        let displacement = a
            .iter()
            .zip(&next)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let rel_decrease = (obj - obj_next) / obj.abs().max(f64::MIN_POSITIVE);

        a = next;
        ga = ga_next;
        obj = obj_next;

        stall = if rel_decrease < opts.tol { stall + 1 } else { 0 };
        kkt = kkt_residual(problem, &a, &ga);

        if (stall >= STALL_STEPS || displacement < opts.tol * eta) && kkt <= 10.0 * opts.tol {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        weights: SimplexVector::new(a)?,
        objective_trace: trace,
        iterations,
        converged,
        kkt_residual: kkt,
    })
}

/// Variational-inequality residual over the simplex vertices:
/// `max(0, max_i (e_i - a)' (b - Ga))`. Zero at the exact minimizer.
fn kkt_residual(problem: &QpProblem, a: &[f64], ga: &[f64]) -> f64 {
    let r: Vec<f64> = problem.linear.iter().zip(ga).map(|(b, g)| b - g).collect();
    let s = pairwise_dot(a, &r);
    let rmax = r.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    (rmax - s).max(0.0)
}

/// Solved estimate plus the solver report.
#[derive(Clone, Debug)]
pub struct SpkdeFit {
    pub estimate: WeightedDensityEstimate,
    pub report: SolveReport,
}

/// Fit the scaled-projection estimator: build the QP and run PGD.
///
/// Non-convergence is not an error; the report carries
/// `converged: false` and the caller decides.
pub fn fit_spkde(
    points: &Points,
    spec: &KernelSpec,
    beta: f64,
    opts: &SolveOptions,
) -> Result<SpkdeFit> {
    let problem = build_qp(points, spec, beta)?;
    let report = solve_pgd(&problem, opts)?;
    let estimate =
        WeightedDensityEstimate::new(points.clone(), report.weights.as_slice().to_vec(), *spec)?;
    Ok(SpkdeFit { estimate, report })
}

/// The classic KDE: uniform weights, no solve.
pub fn fit_kde(points: &Points, spec: &KernelSpec) -> Result<WeightedDensityEstimate> {
    WeightedDensityEstimate::uniform(points.clone(), *spec)
}
