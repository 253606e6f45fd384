//! Regular-grid densities and the infinite-sample decontamination
//! transform.
//!
//! A [`GridDensity`] tabulates a 1-D or 2-D density at cell midpoints;
//! integrals use the midpoint rule. This is the substrate for the
//! theoretical oracle: scaling a density by `beta > 1` and slicing a
//! constant `alpha` off the bottom so that the positive part has mass 1
//! again. The slicing level is found by bisection on the mass function
//! `m(alpha) = sum max(beta f - alpha, 0) h^d`, which is continuous and
//! nonincreasing with `m(0) = beta` — so a root bracket always exists.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::exec;
use crate::kernels::WeightedDensityEstimate;
use crate::numeric::pairwise_sum;

/// Mass tolerance used by normalization checks (`|mass - 1| <= 1e-8`).
pub const NORMALIZED_TOL: f64 = 1e-8;

/// Default bisection tolerance on `|m(alpha) - 1|`.
pub const MASS_TOL: f64 = 1e-10;

const BISECTION_CAP: usize = 200;

/// A nonnegative density tabulated on a regular 1-D or 2-D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    origin: Vec<f64>,
    cell_size: Vec<f64>,
    cells: Vec<usize>,
    values: Vec<f64>,
    normalized: bool,
}

impl GridDensity {
    /// Wrap tabulated values. `normalized` claims mass 1 and is checked.
    pub fn new(
        origin: Vec<f64>,
        cell_size: Vec<f64>,
        cells: Vec<usize>,
        values: Vec<f64>,
        normalized: bool,
    ) -> Result<Self> {
        let dim = origin.len();
        if dim == 0 || dim > 2 {
            return Err(Error::Unsupported(format!("grid dimension {dim} (must be 1 or 2)")));
        }
        if cell_size.len() != dim || cells.len() != dim {
            return Err(Error::invalid("origin, cell_size and cells must have equal length"));
        }
        if cell_size.iter().any(|&h| !(h > 0.0) || !h.is_finite()) {
            return Err(Error::invalid("cell sizes must be positive"));
        }
        if cells.iter().any(|&c| c == 0) {
            return Err(Error::invalid("each axis needs at least one cell"));
        }
        let expected: usize = cells.iter().product();
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("grid values must be nonnegative and finite"));
        }
        let g = GridDensity { origin, cell_size, cells, values, normalized };
        if normalized {
            let mass = g.mass();
            if (mass - 1.0).abs() > NORMALIZED_TOL {
                return Err(Error::invalid(format!(
                    "density flagged normalized but mass is {mass}"
                )));
            }
        }
        Ok(g)
    }

    /// Tabulate a 1-D function at cell midpoints.
    pub fn from_fn_1d(lo: f64, hi: f64, cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::invalid("grid upper bound must exceed lower bound"));
        }
        let h = (hi - lo) / cells as f64;
        let values: Vec<f64> = (0..cells).map(|i| f(lo + (i as f64 + 0.5) * h)).collect();
        GridDensity::new(vec![lo], vec![h], vec![cells], values, false)
    }

    /// Tabulate a 2-D function at cell midpoints.
    pub fn from_fn_2d(
        lo: [f64; 2],
        hi: [f64; 2],
        cells: [usize; 2],
        f: impl Fn(f64, f64) -> f64 + Sync + Send,
    ) -> Result<Self> {
        if !(hi[0] > lo[0]) || !(hi[1] > lo[1]) {
            return Err(Error::invalid("grid upper bound must exceed lower bound"));
        }
        let h = [
            (hi[0] - lo[0]) / cells[0] as f64,
            (hi[1] - lo[1]) / cells[1] as f64,
        ];
        let values = exec::map_indexed(cells[0] * cells[1], |flat| {
            let i = flat / cells[1];
            let j = flat % cells[1];
            f(
                lo[0] + (i as f64 + 0.5) * h[0],
                lo[1] + (j as f64 + 0.5) * h[1],
            )
        });
        GridDensity::new(lo.to_vec(), h.to_vec(), cells.to_vec(), values, false)
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn cell_size(&self) -> &[f64] {
        &self.cell_size
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Volume of one cell, the per-axis product of cell sizes.
    pub fn cell_volume(&self) -> f64 {
        self.cell_size.iter().product()
    }

    /// Midpoint coordinates of the flat cell index.
    pub fn midpoint(&self, flat: usize) -> Vec<f64> {
        match self.dim() {
            1 => vec![self.origin[0] + (flat as f64 + 0.5) * self.cell_size[0]],
            2 => {
                let i = flat / self.cells[1];
                let j = flat % self.cells[1];
                vec![
                    self.origin[0] + (i as f64 + 0.5) * self.cell_size[0],
                    self.origin[1] + (j as f64 + 0.5) * self.cell_size[1],
                ]
            }
            _ => unreachable!(),
        }
    }

    /// Midpoint-rule mass, `sum values * h^d`.
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.values) * self.cell_volume()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Divide by the current mass and flag normalized.
    pub fn renormalize(mut self) -> Result<Self> {
        let mass = self.mass();
        if !(mass > 0.0) {
            return Err(Error::numeric("cannot renormalize a zero-mass grid"));
        }
        for v in self.values.iter_mut() {
            *v /= mass;
        }
        self.normalized = true;
        Ok(self)
    }

    /// Re-check the mass and set the normalized flag accordingly.
    pub fn with_normalized_flag(mut self) -> Self {
        self.normalized = (self.mass() - 1.0).abs() <= NORMALIZED_TOL;
        self
    }

    fn same_geometry(&self, other: &GridDensity) -> Result<()> {
        if self.origin != other.origin
            || self.cell_size != other.cell_size
            || self.cells != other.cells
        {
            return Err(Error::GridMismatch(format!(
                "origin {:?} cells {:?} h {:?} vs origin {:?} cells {:?} h {:?}",
                self.origin, self.cells, self.cell_size, other.origin, other.cells,
                other.cell_size
            )));
        }
        Ok(())
    }

    /// Write as CSV: `#`-prefixed metadata lines, a header, then one row
    /// per cell with its index per axis and value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let join = |xs: &[f64]| {
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        };
        writeln!(w, "# dim,{}", self.dim())?;
        writeln!(
            w,
            "# cells,{}",
            self.cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        )?;
        writeln!(w, "# origin,{}", join(&self.origin))?;
        writeln!(w, "# cell_size,{}", join(&self.cell_size))?;
        writeln!(w, "# normalized,{}", self.normalized)?;
        match self.dim() {
            1 => {
                writeln!(w, "i,value")?;
                for (i, v) in self.values.iter().enumerate() {
                    writeln!(w, "{i},{v}")?;
                }
            }
            _ => {
                writeln!(w, "i,j,value")?;
                for (flat, v) in self.values.iter().enumerate() {
                    let i = flat / self.cells[1];
                    let j = flat % self.cells[1];
                    writeln!(w, "{i},{j},{v}")?;
                }
            }
        }
        Ok(())
    }

    /// Parse the CSV format produced by [`GridDensity::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut dim = 0usize;
        let mut cells: Vec<usize> = Vec::new();
        let mut origin: Vec<f64> = Vec::new();
        let mut cell_size: Vec<f64> = Vec::new();
        let mut normalized = false;
        let mut values: Vec<f64> = Vec::new();
        let mut header_seen = false;

        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let parse_err =
                |what: &str| Error::invalid(format!("grid csv line {}: {what}", lineno + 1));
            if let Some(meta) = trimmed.strip_prefix('#') {
                let fields: Vec<&str> = meta.trim().split(',').collect();
                match fields.first().copied() {
                    Some("dim") => {
                        dim = fields
                            .get(1)
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| parse_err("bad dim"))?
                    }
                    Some("cells") => {
                        cells = fields[1..]
                            .iter()
                            .map(|s| s.parse().map_err(|_| parse_err("bad cells")))
                            .collect::<Result<_>>()?
                    }
                    Some("origin") => {
                        origin = fields[1..]
                            .iter()
                            .map(|s| s.parse().map_err(|_| parse_err("bad origin")))
                            .collect::<Result<_>>()?
                    }
                    Some("cell_size") => {
                        cell_size = fields[1..]
                            .iter()
                            .map(|s| s.parse().map_err(|_| parse_err("bad cell_size")))
                            .collect::<Result<_>>()?
                    }
                    Some("normalized") => {
                        normalized = fields.get(1).map(|s| *s == "true").unwrap_or(false)
                    }
                    _ => {} // unknown metadata is ignored
                }
                continue;
            }
            if !header_seen {
                header_seen = true; // i,value or i,j,value
                if dim == 0 || cells.is_empty() {
                    return Err(parse_err("metadata must precede the header"));
                }
                values = vec![0.0; cells.iter().product()];
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            if fields.len() != dim + 1 {
                return Err(parse_err("wrong column count"));
            }
            let mut flat = 0usize;
            for (ax, s) in fields[..dim].iter().enumerate() {
                let idx: usize = s.parse().map_err(|_| parse_err("bad cell index"))?;
                if idx >= cells[ax] {
                    return Err(parse_err("cell index out of range"));
                }
                flat = flat * cells[ax] + idx;
            }
            values[flat] = fields[dim].parse().map_err(|_| parse_err("bad value"))?;
        }
        GridDensity::new(origin, cell_size, cells, values, normalized)
    }
}

/// Result of the bottom-slicing transform: the level `alpha`, the sliced
/// density, and the residual `|mass - 1|`.
#[derive(Clone, Debug)]
pub struct SliceResult {
    pub alpha: f64,
    pub density: GridDensity,
    pub mass_error: f64,
}

/// Mass of `max(beta f - alpha, 0)` under the midpoint rule.
pub fn sliced_mass(f: &GridDensity, beta: f64, alpha: f64) -> f64 {
    let clipped =
        exec::map_indexed(f.values().len(), |i| (beta * f.values()[i] - alpha).max(0.0));
    pairwise_sum(&clipped) * f.cell_volume()
}

/// Scale by `beta > 1` and slice the unique level `alpha` off the bottom
/// so the result is a density again. Bisection on the mass function over
/// `[0, beta max f]`, at most 200 steps, stopping at `|m - 1| <= tol`.
pub fn slice_transform(f: &GridDensity, beta: f64, tol: f64) -> Result<SliceResult> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("slice requires beta > 1, got {beta}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    let mass = f.mass();
    if (mass - 1.0).abs() > NORMALIZED_TOL {
        return Err(Error::invalid(format!(
            "input density must be normalized (mass {mass})"
        )));
    }

    let mut lo = 0.0;
    let mut hi = beta * f.max_value();
    if !(sliced_mass(f, beta, lo) > 1.0) {
        // m(0) = beta * mass > 1 is guaranteed by the checks above
        return Err(Error::numeric("bisection bracket failure: m(0) <= 1"));
    }
    let mut alpha = None;
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        let m = sliced_mass(f, beta, mid);
        if (m - 1.0).abs() <= tol {
            alpha = Some(mid);
            break;
        }
        if m > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = alpha.ok_or_else(|| {
        Error::numeric(format!(
            "slicing level did not reach |mass-1| <= {tol} in {BISECTION_CAP} bisection steps"
        ))
    })?;

    let values =
        exec::map_indexed(f.values().len(), |i| (beta * f.values()[i] - alpha).max(0.0));
    let density = GridDensity::new(
        f.origin().to_vec(),
        f.cell_size().to_vec(),
        f.cells().to_vec(),
        values,
        false,
    )?
    .with_normalized_flag();
    let mass_error = (density.mass() - 1.0).abs();
    Ok(SliceResult { alpha, density, mass_error })
}

/// The decontamination transform: slice with `beta = 1/(1 - eps)`.
/// `eps = 0` returns the input with `alpha = 0`.
pub fn decontaminate(f_obs: &GridDensity, eps: f64) -> Result<SliceResult> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::invalid(format!("eps must lie in [0, 1), got {eps}")));
    }
    if eps == 0.0 {
        let mass_error = (f_obs.mass() - 1.0).abs();
        return Ok(SliceResult { alpha: 0.0, density: f_obs.clone(), mass_error });
    }
    slice_transform(f_obs, 1.0 / (1.0 - eps), MASS_TOL)
}

/// Pointwise convex combination `(1 - eps) f_tar + eps f_con`.
pub fn mix(f_tar: &GridDensity, f_con: &GridDensity, eps: f64) -> Result<GridDensity> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("eps must lie in [0, 1], got {eps}")));
    }
    f_tar.same_geometry(f_con)?;
    let values: Vec<f64> = f_tar
        .values()
        .iter()
        .zip(f_con.values())
        .map(|(t, c)| (1.0 - eps) * t + eps * c)
        .collect();
    Ok(GridDensity::new(
        f_tar.origin().to_vec(),
        f_tar.cell_size().to_vec(),
        f_tar.cells().to_vec(),
        values,
        false,
    )?
    .with_normalized_flag())
}

/// Outcome of the contamination-shape check: whether the contaminant is
/// flat over the target's support and no higher elsewhere.
#[derive(Clone, Debug)]
pub struct AssumptionAWitness {
    pub holds: bool,
    /// The contaminant level `u` over the target support (midrange).
    pub level: f64,
    /// Flat indices of cells violating flatness or the `<= u` bound.
    pub violations: Vec<usize>,
}

/// Check that `f_con` is constant (spread <= tol) where `f_tar > tol`
/// and at most that level elsewhere.
pub fn check_assumption_a(
    f_tar: &GridDensity,
    f_con: &GridDensity,
    tol: f64,
) -> Result<AssumptionAWitness> {
    f_tar.same_geometry(f_con)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (t, c) in f_tar.values().iter().zip(f_con.values()) {
        if *t > tol {
            lo = lo.min(*c);
            hi = hi.max(*c);
        }
    }
    if !lo.is_finite() {
        // target has no support above tol; vacuously flat at level 0
        let violations: Vec<usize> = f_con
            .values()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > tol)
            .map(|(i, _)| i)
            .collect();
        let holds = violations.is_empty();
        return Ok(AssumptionAWitness { holds, level: 0.0, violations });
    }
    let level = 0.5 * (lo + hi);
    let mut violations = Vec::new();
    for (i, (t, c)) in f_tar.values().iter().zip(f_con.values()).enumerate() {
        let bad = if *t > tol { (c - level).abs() > tol } else { *c > level + tol };
        if bad {
            violations.push(i);
        }
    }
    let holds = hi - lo <= tol && violations.is_empty();
    Ok(AssumptionAWitness { holds, level, violations })
}

/// A tabulated estimate plus its mass diagnostics.
#[derive(Clone, Debug)]
pub struct GridEstimate {
    pub density: GridDensity,
    pub mass: f64,
    /// Set when the tabulated mass strays outside [0.99, 1.01]: the
    /// extent is too small, or the kernel tails too heavy, for grid
    /// comparisons to be trusted.
    pub mass_warning: bool,
}

/// Tabulate a weighted estimate on the box `[lower, upper]` with cell
/// size `h`. No renormalization is applied.
pub fn grid_from_estimate(
    est: &WeightedDensityEstimate,
    lower: &[f64],
    upper: &[f64],
    h: f64,
) -> Result<GridEstimate> {
    let dim = est.dim();
    if dim > 2 {
        return Err(Error::Unsupported(format!(
            "grid tabulation is limited to d <= 2, got {dim}"
        )));
    }
    if lower.len() != dim || upper.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: lower.len() });
    }
    if !(h > 0.0) {
        return Err(Error::invalid("cell size must be positive"));
    }
    let mut cells = Vec::with_capacity(dim);
    for ax in 0..dim {
        if !(upper[ax] > lower[ax]) {
            return Err(Error::invalid("upper corner must exceed lower corner"));
        }
        cells.push(((upper[ax] - lower[ax]) / h).ceil() as usize);
    }
    let total: usize = cells.iter().product();
    let values = exec::map_indexed(total, |flat| {
        let q = match dim {
            1 => vec![lower[0] + (flat as f64 + 0.5) * h],
            _ => {
                let i = flat / cells[1];
                let j = flat % cells[1];
                vec![
                    lower[0] + (i as f64 + 0.5) * h,
                    lower[1] + (j as f64 + 0.5) * h,
                ]
            }
        };
        est.eval_unchecked(&q)
    });
    let density = GridDensity::new(lower.to_vec(), vec![h; dim], cells, values, false)?
        .with_normalized_flag();
    let mass = density.mass();
    let mass_warning = !(0.99..=1.01).contains(&mass);
    Ok(GridEstimate { density, mass, mass_warning })
}

/// Midpoint-rule Lp distance, `p` in {1, 2}.
pub fn lp_distance(f: &GridDensity, g: &GridDensity, p: u32) -> Result<f64> {
    f.same_geometry(g)?;
    let vol = f.cell_volume();
    let diffs: Vec<f64> = match p {
        1 => f.values().iter().zip(g.values()).map(|(a, b)| (a - b).abs()).collect(),
        2 => f.values().iter().zip(g.values()).map(|(a, b)| (a - b) * (a - b)).collect(),
        _ => return Err(Error::invalid(format!("p must be 1 or 2, got {p}"))),
    };
    let total = pairwise_sum(&diffs) * vol;
    Ok(if p == 1 { total } else { total.sqrt() })
}
