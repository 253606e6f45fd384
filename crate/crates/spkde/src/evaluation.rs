//! Performance criteria and the benchmark harness: both KL-divergence
//! estimators, leave-one-out bandwidth selection, the exact Wilcoxon
//! signed-rank test, and the contaminated-training-set evaluation loop.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::contamination::{fit_rejkde, Dataset};
use crate::error::{Error, Result};
use crate::exec;
use crate::kernels::{
    estimate_eval, estimate_sample, KernelFamily, KernelSpec, Points, WeightedDensityEstimate,
};
use crate::numeric::{logspace, pairwise_sum};
use crate::solver::{fit_kde, fit_spkde, SolveOptions};

/// Densities below this floor are clamped before taking logs; clamp
/// counts surface in the estimates.
pub const LOG_CLAMP_FLOOR: f64 = 1e-300;

/// Largest effective sample size for which the Wilcoxon null is
/// enumerated exactly.
pub const WILCOXON_EXACT_LIMIT: usize = 25;

/// Default bandwidth line-search grid: 30 log-spaced points on
/// `[0.01, 3]` (matched to unit-cube-scaled data).
pub fn default_sigma_grid() -> Vec<f64> {
    logspace(0.01, 3.0, 30)
}

/// Direction of a KL-divergence estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KlDirection {
    /// `D(fhat || f0)`, Monte Carlo over draws from `fhat` against a
    /// reference KDE built on the test sample.
    FhatToF0,
    /// The cross-entropy term `-mean log fhat(x)` over test points;
    /// equals `D(f0 || fhat)` up to an additive constant that does not
    /// depend on `fhat`.
    F0ToFhat,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KlEstimate {
    pub value: f64,
    pub direction: KlDirection,
    pub n_eval: usize,
    pub clamp_count: usize,
}

/// Sum of leave-one-out log densities at `sigma`, or `-inf` when some
/// held-out density underflows to zero.
fn loo_log_likelihood(points: &Points, family: KernelFamily, sigma: f64) -> Result<f64> {
    let n = points.len();
    let spec = KernelSpec::new(family, points.dim(), sigma)?;
    let self_term = spec.eval_sq_dist(0.0);
    let logs = exec::map_indexed(n, |i| {
        let xi = points.row(i);
        let mut acc = 0.0;
        for j in 0..n {
            acc += spec.eval_sq_dist(crate::numeric::sq_dist(xi, points.row(j)));
        }
        let loo = (acc - self_term) / (n - 1) as f64;
        if loo > 0.0 {
            loo.ln()
        } else {
            f64::NEG_INFINITY
        }
    });
    if logs.iter().any(|l| l.is_infinite()) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(pairwise_sum(&logs))
}

/// Pick the bandwidth maximizing leave-one-out log-likelihood over the
/// grid; ties break toward the smaller sigma. Bandwidths whose held-out
/// density underflows score `-inf` and cannot win.
pub fn loocv_bandwidth(
    points: &Points,
    family: KernelFamily,
    sigma_grid: &[f64],
) -> Result<f64> {
    if sigma_grid.is_empty() {
        return Err(Error::invalid("sigma grid must be nonempty"));
    }
    if sigma_grid.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::invalid("sigma grid entries must be positive"));
    }
    if points.len() < 2 {
        return Err(Error::invalid("leave-one-out selection needs at least 2 points"));
    }
    let mut sorted = sigma_grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best: Option<(f64, f64)> = None;
    for &sigma in &sorted {
        let score = loo_log_likelihood(points, family, sigma)?;
        if score.is_finite() && best.map_or(true, |(s, _)| score > s) {
            best = Some((score, sigma));
        }
    }
    best.map(|(_, s)| s)
        .ok_or_else(|| Error::numeric("every bandwidth on the grid underflowed"))
}

fn clamped_ln(x: f64, clamps: &mut usize) -> f64 {
    if x < LOG_CLAMP_FLOOR {
        *clamps += 1;
        LOG_CLAMP_FLOOR.ln()
    } else {
        x.ln()
    }
}

/// `D(fhat || f0)` against an explicit reference density: draw
/// `n' = 2 * fhat.n()` samples from `fhat` and average
/// `log(fhat/f_ref)` over them.
pub fn kl_fhat_to_f0_against(
    fhat: &WeightedDensityEstimate,
    f_ref: &WeightedDensityEstimate,
    seed: u64,
) -> Result<KlEstimate> {
    let n_draws = 2 * fhat.n();
    let draws = estimate_sample(fhat, n_draws, seed)?;
    let top = estimate_eval(fhat, &draws)?;
    let bottom = estimate_eval(f_ref, &draws)?;
    let mut clamps = 0usize;
    let logs: Vec<f64> = top
        .iter()
        .zip(&bottom)
        .map(|(t, b)| clamped_ln(*t, &mut clamps) - clamped_ln(*b, &mut clamps))
        .collect();
    Ok(KlEstimate {
        value: pairwise_sum(&logs) / n_draws as f64,
        direction: KlDirection::FhatToF0,
        n_eval: n_draws,
        clamp_count: clamps,
    })
}

/// Build the reference KDE on the test points (bandwidth by LOOCV on the
/// default grid) and estimate `D(fhat || f0)`.
pub fn kl_fhat_to_f0(
    fhat: &WeightedDensityEstimate,
    test_points: &Points,
    seed: u64,
) -> Result<KlEstimate> {
    if test_points.is_empty() {
        return Err(Error::invalid("test points must be nonempty"));
    }
    let family = fhat.kernel().family;
    let sigma = loocv_bandwidth(test_points, family, &default_sigma_grid())?;
    let spec = KernelSpec::new(family, test_points.dim(), sigma)?;
    let f_ref = fit_kde(test_points, &spec)?;
    kl_fhat_to_f0_against(fhat, &f_ref, seed)
}

/// The cross-entropy term of `D(f0 || fhat)`: `-mean log fhat(x)` over
/// the test points. Reported up to the additive entropy constant of
/// `f0`, which never depends on the estimate under comparison.
pub fn kl_f0_to_fhat(fhat: &WeightedDensityEstimate, test_points: &Points) -> Result<KlEstimate> {
    if test_points.is_empty() {
        return Err(Error::invalid("test points must be nonempty"));
    }
    let vals = estimate_eval(fhat, test_points)?;
    let mut clamps = 0usize;
    let logs: Vec<f64> = vals.iter().map(|v| clamped_ln(*v, &mut clamps)).collect();
    Ok(KlEstimate {
        value: -pairwise_sum(&logs) / test_points.len() as f64,
        direction: KlDirection::F0ToFhat,
        n_eval: test_points.len(),
        clamp_count: clamps,
    })
}

/// Wilcoxon signed-rank outcome. `r1 + r2 = n_eff (n_eff + 1) / 2`;
/// midranks on ties make the rank sums half-integral.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub r1: f64,
    pub r2: f64,
    pub p_value: f64,
    pub n_effective: usize,
    /// Exact sign-enumeration null (always for `n_effective <= 25`);
    /// false means the normal approximation with continuity correction.
    pub exact: bool,
}

/// Paired two-sided Wilcoxon signed-rank test.
///
/// Exact-zero differences are dropped; absolute differences are ranked
/// ascending with average ranks on ties; `r1` sums the ranks where
/// `a > b`. The p-value is `P(min(R1*, R2*) <= min(r1, r2))` under the
/// exact sign-flip null for `n_effective <= 25`, otherwise a normal
/// approximation (flagged).
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.is_empty() {
        return Err(Error::invalid("need at least one pair"));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("differences must be finite"));
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult { r1: 0.0, r2: 0.0, p_value: 1.0, n_effective: 0, exact: true });
    }

    // ranks of |d| ascending; doubled so midranks stay integral
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().partial_cmp(&diffs[j].abs()).unwrap());
    let mut dranks = vec![0u64; n];
    let mut tie_sizes: Vec<usize> = Vec::new();
    let mut k = 0;
    while k < n {
        let mut j = k;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[k]].abs() {
            j += 1;
        }
        // positions k..=j (0-based) share the average of ranks k+1..=j+1
        let doubled_avg = (k + 1 + j + 1) as u64;
        for &idx in &order[k..=j] {
            dranks[idx] = doubled_avg;
        }
        tie_sizes.push(j - k + 1);
        k = j + 1;
    }

    let r1_d: u64 = diffs
        .iter()
        .zip(&dranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total_d: u64 = dranks.iter().sum();
    let r2_d = total_d - r1_d;
    let r1 = r1_d as f64 / 2.0;
    let r2 = r2_d as f64 / 2.0;

    let (p_value, exact) = if n <= WILCOXON_EXACT_LIMIT {
        (exact_min_ranksum_p(&dranks, r1_d.min(r2_d)), true)
    } else {
        (normal_approx_p(n, r1.min(r2), &tie_sizes), false)
    };

    Ok(WilcoxonResult {
        r1,
        r2,
        p_value: p_value.clamp(f64::MIN_POSITIVE, 1.0),
        n_effective: n,
        exact,
    })
}

/// Exact two-sided p by dynamic programming over the 2^n sign
/// assignments: the distribution of the positive-rank sum is built by
/// convolution, then `P(min(S, T - S) <= m)` is read off.
fn exact_min_ranksum_p(dranks: &[u64], m_doubled: u64) -> f64 {
    let total: u64 = dranks.iter().sum();
    let t = total as usize;
    let mut counts = vec![0.0f64; t + 1];
    counts[0] = 1.0;
    for &r in dranks {
        let r = r as usize;
        for s in (r..=t).rev() {
            counts[s] += counts[s - r];
        }
    }
    let mut favourable = 0.0;
    for (s, c) in counts.iter().enumerate() {
        let s = s as u64;
        if s.min(total - s) <= m_doubled {
            favourable += c;
        }
    }
    favourable / 2f64.powi(dranks.len() as i32)
}

/// Normal approximation with continuity correction and tie correction.
fn normal_approx_p(n: usize, w_min: f64, tie_sizes: &[usize]) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w_min - mean + 0.5) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * normal.cdf(z)).min(1.0)
}

/// Estimation method under evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Kde,
    Spkde,
    RejKde,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Kde => "kde",
            Method::Spkde => "spkde",
            Method::RejKde => "rejkde",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        match s.to_ascii_lowercase().as_str() {
            "kde" => Ok(Method::Kde),
            "spkde" => Ok(Method::Spkde),
            "rejkde" => Ok(Method::RejKde),
            other => Err(Error::invalid(format!("unknown method {other:?}"))),
        }
    }
}

/// Benchmark configuration; defaults follow the evaluation protocol
/// (beta = 2, reject the lowest decile, Gaussian kernel, 15 seeds).
#[derive(Clone, Debug)]
pub struct BenchmarkConfig {
    pub eps_list: Vec<f64>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Label-0 training-set size per cell.
    pub n0: usize,
    pub beta: f64,
    pub reject_fraction: f64,
    pub sigma_grid: Vec<f64>,
    pub family: KernelFamily,
    pub solve: SolveOptions,
}

impl BenchmarkConfig {
    pub fn new(n0: usize) -> Self {
        BenchmarkConfig {
            eps_list: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            methods: vec![Method::Kde, Method::Spkde, Method::RejKde],
            seeds: (0..15).collect(),
            n0,
            beta: 2.0,
            reject_fraction: 0.1,
            sigma_grid: default_sigma_grid(),
            family: KernelFamily::Gaussian,
            // experiment-scale problems stall below the library default
            // tolerance; 1e-5 converges in a few thousand iterations with
            // no measurable effect on either KL metric
            solve: SolveOptions::with_tol(1e-5),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
    pub per_seed: Vec<f64>,
}

impl MetricSummary {
    fn from_values(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = pairwise_sum(&values) / n;
        let std = if values.len() > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MetricSummary { mean, std, per_seed: values }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodCell {
    pub kl_fhat_f0: MetricSummary,
    pub kl_f0_fhat: MetricSummary,
    /// Selected bandwidth per seed (shared by every method in the cell).
    pub sigma: Vec<f64>,
    pub clamp_count: usize,
    /// Solver cells that hit the iteration cap without converging.
    pub unconverged: usize,
}

/// Results of one dataset's sweep, keyed `eps -> method`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub n0: usize,
    pub seeds: Vec<u64>,
    pub results: BTreeMap<String, BTreeMap<String, MethodCell>>,
    /// Epsilons skipped because the dataset lacks enough label-1 points.
    pub unavailable: Vec<String>,
}

/// Stable key for an epsilon value (shortest round-trip decimal).
pub fn eps_key(eps: f64) -> String {
    format!("{eps}")
}

impl ExperimentReport {
    pub fn cell(&self, eps: f64, method: Method) -> Option<&MethodCell> {
        self.results.get(&eps_key(eps)).and_then(|m| m.get(method.name()))
    }

    /// JSON with sorted keys.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)?)
    }

    /// Flat CSV: one row per (eps, method, metric, seed).
    pub fn write_flat_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "dataset,eps,method,metric,seed,value")?;
        for (eps, methods) in &self.results {
            for (method, cell) in methods {
                for (metric, summary) in
                    [("kl_fhat_f0", &cell.kl_fhat_f0), ("kl_f0_fhat", &cell.kl_f0_fhat)]
                {
                    for (seed, v) in self.seeds.iter().zip(&summary.per_seed) {
                        writeln!(
                            w,
                            "{},{eps},{method},{metric},{seed},{v}",
                            self.dataset
                        )?;
                    }
                }
            }
        }
        Ok(())
    }
}

struct CellOutcome {
    kl_fhat_f0: f64,
    kl_f0_fhat: f64,
    sigma: f64,
    clamps: usize,
    unconverged: bool,
}

/// Run the full contaminated-training evaluation on a labeled dataset.
///
/// Per `(eps, seed)` cell: shuffle with a stream derived from the seed
/// and epsilon index, take `n0` label-0 training points plus
/// `round(eps/(1-eps) * n0)` label-1 points, scale to the unit cube,
/// select the bandwidth by LOOCV on the contaminated training data, fit
/// every method with that bandwidth, and score both KL metrics against
/// the held-out label-0 points.
pub fn benchmark_run(
    dataset: &Dataset,
    name: &str,
    config: &BenchmarkConfig,
) -> Result<ExperimentReport> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    if config.methods.is_empty() || config.seeds.is_empty() || config.eps_list.is_empty() {
        return Err(Error::invalid("methods, seeds and eps list must be nonempty"));
    }
    let idx0_all = dataset.label_indices(0)?;
    let idx1_all = dataset.label_indices(1)?;
    if config.n0 == 0 || config.n0 + 1 > idx0_all.len() {
        return Err(Error::invalid(format!(
            "n0 = {} needs at least n0 + 1 label-0 points, dataset has {}",
            config.n0,
            idx0_all.len()
        )));
    }

    let mut available: Vec<(usize, f64)> = Vec::new();
    let mut unavailable = Vec::new();
    for (ei, &eps) in config.eps_list.iter().enumerate() {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::invalid(format!("eps must lie in [0, 1), got {eps}")));
        }
        let m1 = (eps / (1.0 - eps) * config.n0 as f64).round() as usize;
        if m1 > idx1_all.len() {
            unavailable.push(eps_key(eps));
        } else {
            available.push((ei, eps));
        }
    }

    let n_seeds = config.seeds.len();
    let n_cells = available.len() * n_seeds;
    let outcomes: Vec<Result<Vec<CellOutcome>>> = exec::map_indexed(n_cells, |cell| {
        let (slot, si) = (cell / n_seeds, cell % n_seeds);
        let (ei, eps) = available[slot];
        let seed = config.seeds[si];

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ei as u64 + 1);
        let mut idx0 = idx0_all.clone();
        let mut idx1 = idx1_all.clone();
        idx0.shuffle(&mut rng);
        idx1.shuffle(&mut rng);

        let m1 = (eps / (1.0 - eps) * config.n0 as f64).round() as usize;
        let mut train_idx = idx0[..config.n0].to_vec();
        train_idx.extend_from_slice(&idx1[..m1]);
        let train = dataset.select(&train_idx)?;
        let test = dataset.select(&idx0[config.n0..])?;

        let (train_scaled, transform) = crate::contamination::scale_to_unit_cube(&train)?;
        let test_scaled = transform.apply(&test)?;

        let sigma = loocv_bandwidth(&train_scaled, config.family, &config.sigma_grid)?;
        let spec = KernelSpec::new(config.family, train_scaled.dim(), sigma)?;

        // one reference KDE per cell, shared by every method
        let ref_sigma = loocv_bandwidth(&test_scaled, config.family, &config.sigma_grid)?;
        let ref_spec = KernelSpec::new(config.family, test_scaled.dim(), ref_sigma)?;
        let f_ref = fit_kde(&test_scaled, &ref_spec)?;

        let mut per_method = Vec::with_capacity(config.methods.len());
        for (mi, method) in config.methods.iter().enumerate() {
            let (est, unconverged) = match method {
                Method::Kde => (fit_kde(&train_scaled, &spec)?, false),
                Method::Spkde => {
                    let fit = fit_spkde(&train_scaled, &spec, config.beta, &config.solve)?;
                    (fit.estimate, !fit.report.converged)
                }
                Method::RejKde => {
                    (fit_rejkde(&train_scaled, &spec, config.reject_fraction)?, false)
                }
            };
            let kl_seed = seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((ei as u64) << 24)
                .wrapping_add(mi as u64);
            let k1 = kl_fhat_to_f0_against(&est, &f_ref, kl_seed)?;
            let k2 = kl_f0_to_fhat(&est, &test_scaled)?;
            per_method.push(CellOutcome {
                kl_fhat_f0: k1.value,
                kl_f0_fhat: k2.value,
                sigma,
                clamps: k1.clamp_count + k2.clamp_count,
                unconverged,
            });
        }
        Ok(per_method)
    });

    let mut results: BTreeMap<String, BTreeMap<String, MethodCell>> = BTreeMap::new();
    for (slot, &(_, eps)) in available.iter().enumerate() {
        let mut by_method: BTreeMap<String, MethodCell> = BTreeMap::new();
        for (mi, method) in config.methods.iter().enumerate() {
            let mut v1 = Vec::with_capacity(n_seeds);
            let mut v2 = Vec::with_capacity(n_seeds);
            let mut sigmas = Vec::with_capacity(n_seeds);
            let mut clamps = 0;
            let mut unconverged = 0;
            for si in 0..n_seeds {
                let cell = outcomes[slot * n_seeds + si].as_ref().map_err(|e| {
                    Error::numeric(format!("cell eps={eps} seed={}: {e}", config.seeds[si]))
                })?;
                let o = &cell[mi];
                v1.push(o.kl_fhat_f0);
                v2.push(o.kl_f0_fhat);
                sigmas.push(o.sigma);
                clamps += o.clamps;
                unconverged += o.unconverged as usize;
            }
            by_method.insert(
                method.name().to_string(),
                MethodCell {
                    kl_fhat_f0: MetricSummary::from_values(v1),
                    kl_f0_fhat: MetricSummary::from_values(v2),
                    sigma: sigmas,
                    clamp_count: clamps,
                    unconverged,
                },
            );
        }
        results.insert(eps_key(eps), by_method);
    }

    Ok(ExperimentReport {
        dataset: name.to_string(),
        n0: config.n0,
        seeds: config.seeds.clone(),
        results,
        unavailable,
    })
}

/// Pairwise method comparison across datasets, one Wilcoxon test per
/// (metric, eps) over the per-dataset means.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodComparison {
    pub method_a: Method,
    pub method_b: Method,
    /// metric -> eps -> test result
    pub tests: BTreeMap<String, BTreeMap<String, WilcoxonResult>>,
}

pub fn compare_methods(
    reports: &[ExperimentReport],
    method_a: Method,
    method_b: Method,
) -> Result<MethodComparison> {
    if reports.is_empty() {
        return Err(Error::invalid("need at least one report"));
    }
    let mut tests: BTreeMap<String, BTreeMap<String, WilcoxonResult>> = BTreeMap::new();
    for metric in ["kl_fhat_f0", "kl_f0_fhat"] {
        let mut by_eps = BTreeMap::new();
        let eps_keys: Vec<String> = reports[0].results.keys().cloned().collect();
        for ek in eps_keys {
            let mut a_means = Vec::new();
            let mut b_means = Vec::new();
            for report in reports {
                let row = report.results.get(&ek).ok_or_else(|| {
                    Error::invalid(format!(
                        "report {} lacks eps {ek}; reports must share an eps grid",
                        report.dataset
                    ))
                })?;
                let ca = row.get(method_a.name()).ok_or_else(|| {
                    Error::invalid(format!("report {} lacks {}", report.dataset, method_a.name()))
                })?;
                let cb = row.get(method_b.name()).ok_or_else(|| {
                    Error::invalid(format!("report {} lacks {}", report.dataset, method_b.name()))
                })?;
                let (ma, mb) = match metric {
                    "kl_fhat_f0" => (ca.kl_fhat_f0.mean, cb.kl_fhat_f0.mean),
                    _ => (ca.kl_f0_fhat.mean, cb.kl_f0_fhat.mean),
                };
                a_means.push(ma);
                b_means.push(mb);
            }
            by_eps.insert(ek, wilcoxon_signed_rank(&a_means, &b_means)?);
        }
        tests.insert(metric.to_string(), by_eps);
    }
    Ok(MethodComparison { method_a, method_b, tests })
}

impl MethodComparison {
    /// Table-style CSV: metric, eps, r1, r2, p, n, exact.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "metric,eps,method_a,method_b,r1,r2,p_value,n_effective,exact")?;
        for (metric, by_eps) in &self.tests {
            for (eps, t) in by_eps {
                writeln!(
                    w,
                    "{metric},{eps},{},{},{},{},{},{},{}",
                    self.method_a.name(),
                    self.method_b.name(),
                    t.r1,
                    t.r2,
                    t.p_value,
                    t.n_effective,
                    t.exact
                )?;
            }
        }
        Ok(())
    }
}
