//! Contaminated-data generation, dataset preprocessing, and the
//! rejection-KDE baseline.
//!
//! Observed data follow `(1 - eps) f_tar + eps f_con`: each draw comes
//! from the contaminant with probability `eps`, otherwise from the
//! target. Labels are kept for evaluation only; estimators never see
//! them.

use std::io::{Read, Write};

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::grid::{mix, GridDensity};
use crate::kernels::{estimate_eval, KernelSpec, Points, WeightedDensityEstimate};
use crate::solver::fit_kde;

/// An analytic density that can be sampled and tabulated on a grid.
/// Gaussian mixtures are isotropic per component.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceDensity {
    Uniform {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        stds: Vec<f64>,
    },
}

impl SourceDensity {
    pub fn dim(&self) -> usize {
        match self {
            SourceDensity::Uniform { lo, .. } => lo.len(),
            SourceDensity::GaussianMixture { means, .. } => {
                means.first().map(|m| m.len()).unwrap_or(0)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SourceDensity::Uniform { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::invalid("uniform bounds must be nonempty, equal length"));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                    return Err(Error::invalid("uniform needs hi > lo on every axis"));
                }
            }
            SourceDensity::GaussianMixture { weights, means, stds } => {
                if weights.is_empty()
                    || weights.len() != means.len()
                    || weights.len() != stds.len()
                {
                    return Err(Error::invalid("mixture component lists must be equal length"));
                }
                let d = means[0].len();
                if d == 0 || means.iter().any(|m| m.len() != d) {
                    return Err(Error::invalid("mixture means must share a positive dimension"));
                }
                if stds.iter().any(|&s| !(s > 0.0)) {
                    return Err(Error::invalid("mixture stds must be positive"));
                }
                let total: f64 = weights.iter().sum();
                if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid("mixture weights must be a distribution"));
                }
            }
        }
        Ok(())
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        match self {
            SourceDensity::Uniform { lo, hi } => {
                let inside = lo.iter().zip(hi).zip(x).all(|((a, b), xi)| *a <= *xi && *xi < *b);
                if inside {
                    1.0 / lo.iter().zip(hi).map(|(a, b)| b - a).product::<f64>()
                } else {
                    0.0
                }
            }
            SourceDensity::GaussianMixture { weights, means, stds } => {
                let d = self.dim() as f64;
                let mut acc = 0.0;
                for ((w, m), s) in weights.iter().zip(means).zip(stds) {
                    let r2 = crate::numeric::sq_dist(x, m);
                    let norm = (2.0 * std::f64::consts::PI * s * s).powf(-d / 2.0);
                    acc += w * norm * (-r2 / (2.0 * s * s)).exp();
                }
                acc
            }
        }
    }

    /// CDF for 1-D densities (used by goodness-of-fit checks).
    pub fn cdf_1d(&self, x: f64) -> Result<f64> {
        if self.dim() != 1 {
            return Err(Error::Unsupported("cdf_1d requires a 1-D density".into()));
        }
        match self {
            SourceDensity::Uniform { lo, hi } => {
                Ok(((x - lo[0]) / (hi[0] - lo[0])).clamp(0.0, 1.0))
            }
            SourceDensity::GaussianMixture { weights, means, stds } => {
                let mut acc = 0.0;
                for ((w, m), s) in weights.iter().zip(means).zip(stds) {
                    let n = Normal::new(m[0], *s)
                        .map_err(|e| Error::invalid(format!("bad component: {e}")))?;
                    acc += w * n.cdf(x);
                }
                Ok(acc)
            }
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            SourceDensity::Uniform { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| rng.random_range(*a..*b))
                .collect(),
            SourceDensity::GaussianMixture { weights, means, stds } => {
                let idx = WeightedIndex::new(weights).expect("validated weights");
                let c = idx.sample(rng);
                means[c]
                    .iter()
                    .map(|&m| {
                        let z: f64 = rng.sample(StandardNormal);
                        m + stds[c] * z
                    })
                    .collect()
            }
        }
    }

    /// Tabulate on `[lo, hi]` and renormalize to the window, so grid
    /// truths are exact grid densities even when analytic tails poke out.
    pub fn tabulate(&self, lo: &[f64], hi: &[f64], cells: &[usize]) -> Result<GridDensity> {
        self.validate()?;
        let d = self.dim();
        if d > 2 {
            return Err(Error::Unsupported(format!("grid truth limited to d <= 2, got {d}")));
        }
        if lo.len() != d || hi.len() != d || cells.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: lo.len() });
        }
        let raw = match d {
            1 => GridDensity::from_fn_1d(lo[0], hi[0], cells[0], |x| self.pdf(&[x]))?,
            _ => GridDensity::from_fn_2d(
                [lo[0], lo[1]],
                [hi[0], hi[1]],
                [cells[0], cells[1]],
                |x, y| self.pdf(&[x, y]),
            )?,
        };
        raw.renormalize()
    }
}

/// A full synthetic scenario: target, contaminant, contamination rate,
/// sample count, seed, and the companion robustness constant
/// `beta = 1/(1 - eps)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub target: SourceDensity,
    pub contaminant: SourceDensity,
    pub eps: f64,
    pub n: usize,
    pub seed: u64,
    pub beta: f64,
}

impl ContaminationSpec {
    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        self.contaminant.validate()?;
        if self.target.dim() != self.contaminant.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.target.dim(),
                got: self.contaminant.dim(),
            });
        }
        if !(0.0..1.0).contains(&self.eps) {
            return Err(Error::invalid(format!("eps must lie in [0, 1), got {}", self.eps)));
        }
        if self.n == 0 {
            return Err(Error::invalid("n must be >= 1"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }
}

/// Which component a sample was drawn from. `Target` carries label 0 in
/// CSV form, `Contaminant` label 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleSource {
    Target,
    Contaminant,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabeledSample {
    pub point: Vec<f64>,
    pub source: SampleSource,
}

/// Draw `spec.n` labeled samples: contaminant with probability `eps`,
/// target otherwise. One seeded stream; byte-reproducible.
pub fn sample_mixture(spec: &ContaminationSpec) -> Result<Vec<LabeledSample>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let from_con = rng.random::<f64>() < spec.eps;
        let (source, point) = if from_con {
            (SampleSource::Contaminant, spec.contaminant.sample(&mut rng))
        } else {
            (SampleSource::Target, spec.target.sample(&mut rng))
        };
        out.push(LabeledSample { point, source });
    }
    Ok(out)
}

/// Draw a labeled pool for benchmark resampling: `n_target` target rows
/// followed by `n_contaminant` contaminant rows, one seeded stream.
pub fn sample_pool(
    spec: &ContaminationSpec,
    n_target: usize,
    n_contaminant: usize,
    seed: u64,
) -> Result<Vec<LabeledSample>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_target + n_contaminant);
    for _ in 0..n_target {
        out.push(LabeledSample {
            point: spec.target.sample(&mut rng),
            source: SampleSource::Target,
        });
    }
    for _ in 0..n_contaminant {
        out.push(LabeledSample {
            point: spec.contaminant.sample(&mut rng),
            source: SampleSource::Contaminant,
        });
    }
    Ok(out)
}

/// Feature matrix of the samples, labels dropped.
pub fn samples_to_points(samples: &[LabeledSample]) -> Result<Points> {
    let rows: Vec<Vec<f64>> = samples.iter().map(|s| s.point.clone()).collect();
    Points::from_rows(&rows)
}

/// The idealized uniform-noise experiment: a two-bump 1-D Gaussian
/// mixture (main mode left, smaller bump right) contaminated by
/// Uniform[-2, 2] with eps = 0.2, n = 500, beta = 1/(1 - eps) = 1.25.
pub fn fig4_experiment_spec() -> ContaminationSpec {
    ContaminationSpec {
        target: SourceDensity::GaussianMixture {
            weights: vec![0.7, 0.3],
            means: vec![vec![-0.7], vec![0.9]],
            stds: vec![0.25, 0.2],
        },
        contaminant: SourceDensity::Uniform { lo: vec![-2.0], hi: vec![2.0] },
        eps: 0.2,
        n: 500,
        seed: 0,
        beta: 1.25,
    }
}

/// Per-axis affine map onto `[0, 1]`, kept for inverse transforms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitCubeTransform {
    mins: Vec<f64>,
    ranges: Vec<f64>,
    degenerate: Vec<bool>,
}

impl UnitCubeTransform {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }

    pub fn apply(&self, data: &Points) -> Result<Points> {
        if data.dim() != self.mins.len() {
            return Err(Error::DimensionMismatch { expected: self.mins.len(), got: data.dim() });
        }
        let d = data.dim();
        let mut out = Vec::with_capacity(data.len() * d);
        for row in data.rows() {
            for ax in 0..d {
                out.push(if self.degenerate[ax] {
                    0.5
                } else {
                    (row[ax] - self.mins[ax]) / self.ranges[ax]
                });
            }
        }
        Points::from_flat(out, d)
    }

    pub fn invert(&self, data: &Points) -> Result<Points> {
        if data.dim() != self.mins.len() {
            return Err(Error::DimensionMismatch { expected: self.mins.len(), got: data.dim() });
        }
        let d = data.dim();
        let mut out = Vec::with_capacity(data.len() * d);
        for row in data.rows() {
            for ax in 0..d {
                out.push(if self.degenerate[ax] {
                    self.mins[ax]
                } else {
                    self.mins[ax] + row[ax] * self.ranges[ax]
                });
            }
        }
        Points::from_flat(out, d)
    }
}

/// Rescale each axis to `[0, 1]`; constant axes map to 0.5 and are
/// flagged degenerate in the returned transform.
pub fn scale_to_unit_cube(data: &Points) -> Result<(Points, UnitCubeTransform)> {
    if data.len() < 2 {
        return Err(Error::invalid("unit-cube scaling needs at least 2 points"));
    }
    let d = data.dim();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for row in data.rows() {
        for ax in 0..d {
            mins[ax] = mins[ax].min(row[ax]);
            maxs[ax] = maxs[ax].max(row[ax]);
        }
    }
    let mut ranges = vec![0.0; d];
    let mut degenerate = vec![false; d];
    for ax in 0..d {
        let r = maxs[ax] - mins[ax];
        if r > 0.0 {
            ranges[ax] = r;
        } else {
            ranges[ax] = 1.0;
            degenerate[ax] = true;
        }
    }
    let t = UnitCubeTransform { mins, ranges, degenerate };
    let scaled = t.apply(data)?;
    Ok((scaled, t))
}

/// Rejection KDE: score every sample under the pilot KDE, drop the
/// `floor(reject_fraction * n)` lowest-scoring points (ties broken by
/// index), rebuild a uniform-weight KDE on the survivors with the same
/// bandwidth.
pub fn fit_rejkde(
    points: &Points,
    spec: &KernelSpec,
    reject_fraction: f64,
) -> Result<WeightedDensityEstimate> {
    if points.len() < 2 {
        return Err(Error::invalid("rejection KDE needs at least 2 points"));
    }
    if !(0.0..1.0).contains(&reject_fraction) {
        return Err(Error::invalid(format!(
            "reject_fraction must lie in [0, 1), got {reject_fraction}"
        )));
    }
    let n = points.len();
    let pilot = fit_kde(points, spec)?;
    let scores = estimate_eval(&pilot, points)?;
    let drop = (reject_fraction * n as f64).floor() as usize;
    if drop >= n {
        return Err(Error::invalid("rejection would discard every sample"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        scores[i].partial_cmp(&scores[j]).expect("finite scores").then(i.cmp(&j))
    });
    let mut survivors: Vec<usize> = order[drop..].to_vec();
    survivors.sort_unstable();
    let rows: Vec<Vec<f64>> = survivors.iter().map(|&i| points.row(i).to_vec()).collect();
    fit_kde(&Points::from_rows(&rows)?, spec)
}

/// Tabulated ground truth for a scenario: target, contaminant, and
/// their mixture on a shared grid.
#[derive(Clone, Debug)]
pub struct GridTruth {
    pub f_tar: GridDensity,
    pub f_con: GridDensity,
    pub f_obs: GridDensity,
}

/// Tabulate the scenario's densities on `[lo, hi]` with `cells` per
/// axis. Each factor is renormalized to the window before mixing.
pub fn grid_truth(
    spec: &ContaminationSpec,
    lo: &[f64],
    hi: &[f64],
    cells: &[usize],
) -> Result<GridTruth> {
    spec.validate()?;
    let f_tar = spec.target.tabulate(lo, hi, cells)?;
    let f_con = spec.contaminant.tabulate(lo, hi, cells)?;
    let f_obs = mix(&f_tar, &f_con, spec.eps)?;
    Ok(GridTruth { f_tar, f_con, f_obs })
}

/// A feature matrix with an optional binary label column.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub points: Points,
    pub labels: Option<Vec<u8>>,
}

impl Dataset {
    /// Indices carrying the given label. Errors if the dataset has none.
    pub fn label_indices(&self, label: u8) -> Result<Vec<usize>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::invalid("dataset has no label column"))?;
        Ok(labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == label)
            .map(|(i, _)| i)
            .collect())
    }

    pub fn select(&self, indices: &[usize]) -> Result<Points> {
        let rows: Vec<Vec<f64>> =
            indices.iter().map(|&i| self.points.row(i).to_vec()).collect();
        Points::from_rows(&rows)
    }
}

/// Read the dataset CSV format: header row, feature columns as decimal
/// reals, optional final column `label` in {0, 1}.
pub fn read_dataset_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::invalid("dataset csv has no columns"));
    }
    let has_label = headers.iter().last() == Some("label");
    let n_features = if has_label { headers.len() - 1 } else { headers.len() };
    if n_features == 0 {
        return Err(Error::invalid("dataset csv has no feature columns"));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let lineno = i + 2; // header is line 1
        if record.len() != headers.len() {
            return Err(Error::invalid(format!(
                "line {lineno}: expected {} fields, got {}",
                headers.len(),
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(n_features);
        for field in record.iter().take(n_features) {
            row.push(field.trim().parse::<f64>().map_err(|_| {
                Error::invalid(format!("line {lineno}: bad numeric field {field:?}"))
            })?);
        }
        rows.push(row);
        if has_label {
            let raw = record.get(headers.len() - 1).unwrap().trim();
            match raw {
                "0" => labels.push(0),
                "1" => labels.push(1),
                _ => {
                    return Err(Error::invalid(format!(
                        "line {lineno}: label must be 0 or 1, got {raw:?}"
                    )))
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::invalid("dataset csv has no data rows"));
    }
    Ok(Dataset {
        points: Points::from_rows(&rows)?,
        labels: if has_label { Some(labels) } else { None },
    })
}

/// Write labeled samples in the dataset CSV format (label column last).
pub fn write_labeled_csv<W: Write>(mut w: W, samples: &[LabeledSample]) -> Result<()> {
    let d = samples.first().map(|s| s.point.len()).unwrap_or(1);
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    writeln!(w, "{}", header.join(","))?;
    for s in samples {
        let mut fields: Vec<String> = s.point.iter().map(|x| x.to_string()).collect();
        fields.push(match s.source {
            SampleSource::Target => "0".into(),
            SampleSource::Contaminant => "1".into(),
        });
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}
