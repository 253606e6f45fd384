use std::fs;
use std::io::BufReader;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use spkde::contamination::{
    fig4_experiment_spec, grid_truth, read_dataset_csv, sample_mixture, sample_pool,
    samples_to_points, write_labeled_csv, ContaminationSpec, Dataset, SampleSource,
    SourceDensity,
};
use spkde::evaluation::{
    benchmark_run, compare_methods, default_sigma_grid, loocv_bandwidth, BenchmarkConfig,
    Method,
};
use spkde::grid::{decontaminate, lp_distance, slice_transform, GridDensity, MASS_TOL};
use spkde::kernels::{KernelFamily, KernelSpec};
use spkde::numeric::logspace;
use spkde::solver::{fit_kde, fit_spkde, SolveOptions, SolveReport};
use spkde::{contamination::fit_rejkde, WeightedDensityEstimate};

use crate::{CliError, EvalArgs, FitArgs, OracleArgs, SynthArgs};

type CliResult = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_kernel(name: &str) -> Result<KernelFamily, CliError> {
    match name.to_ascii_lowercase().as_str() {
        "gaussian" => Ok(KernelFamily::Gaussian),
        "cauchy" => Ok(KernelFamily::Cauchy),
        other => Err(usage(format!("unknown kernel {other:?} (gaussian|cauchy)"))),
    }
}

/// Parse `lo:hi:count` into a log-spaced bandwidth grid.
fn parse_sigma_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("--sigma-grid expects lo:hi:count, got {s:?}")));
    }
    let lo: f64 = parts[0].parse().map_err(|_| usage("bad sigma-grid lo"))?;
    let hi: f64 = parts[1].parse().map_err(|_| usage("bad sigma-grid hi"))?;
    let count: usize = parts[2].parse().map_err(|_| usage("bad sigma-grid count"))?;
    if !(lo > 0.0) || !(hi >= lo) || count == 0 {
        return Err(usage("sigma-grid needs 0 < lo <= hi and count >= 1"));
    }
    Ok(logspace(lo, hi, count))
}

/// JSON with sorted keys, pretty-printed, trailing newline.
fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let v = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_grid_csv(path: &Path, grid: &GridDensity) -> CliResult {
    let mut buf = Vec::new();
    grid.write_csv(&mut buf).map_err(CliError::from)?;
    fs::write(path, buf)?;
    Ok(())
}

fn scenario_by_name(name: &str) -> Result<ContaminationSpec, CliError> {
    match name {
        "fig4" => Ok(fig4_experiment_spec()),
        other => Err(usage(format!("unknown scenario {other:?} (built in: fig4)"))),
    }
}

/// Tabulation window for a scenario: the contaminant's box when it is
/// uniform (the idealized setting), otherwise the union of supports
/// with Gaussian components cut at 8 standard deviations.
fn scenario_window(spec: &ContaminationSpec) -> (Vec<f64>, Vec<f64>) {
    if let SourceDensity::Uniform { lo, hi } = &spec.contaminant {
        return (lo.clone(), hi.clone());
    }
    let d = spec.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for source in [&spec.target, &spec.contaminant] {
        match source {
            SourceDensity::Uniform { lo: a, hi: b } => {
                for ax in 0..d {
                    lo[ax] = lo[ax].min(a[ax]);
                    hi[ax] = hi[ax].max(b[ax]);
                }
            }
            SourceDensity::GaussianMixture { means, stds, .. } => {
                for (m, s) in means.iter().zip(stds) {
                    for ax in 0..d {
                        lo[ax] = lo[ax].min(m[ax] - 8.0 * s);
                        hi[ax] = hi[ax].max(m[ax] + 8.0 * s);
                    }
                }
            }
        }
    }
    (lo, hi)
}

fn cells_for(lo: &[f64], hi: &[f64], h: f64) -> Vec<usize> {
    lo.iter()
        .zip(hi)
        .map(|(a, b)| (((b - a) / h).round() as usize).max(1))
        .collect()
}

#[derive(Serialize)]
struct ModelFile<'a> {
    method: &'a str,
    kernel: &'a KernelSpec,
    n: usize,
    points: Vec<Vec<f64>>,
    weights: &'a [f64],
    beta: Option<f64>,
    seed: u64,
    sigma_selection: &'a str,
    converged: Option<bool>,
    solve: Option<&'a SolveReport>,
}

fn write_model(
    path: &Path,
    method: &str,
    est: &WeightedDensityEstimate,
    beta: Option<f64>,
    seed: u64,
    sigma_selection: &str,
    solve: Option<&SolveReport>,
) -> CliResult {
    let model = ModelFile {
        method,
        kernel: est.kernel(),
        n: est.n(),
        points: est.points().rows().map(|r| r.to_vec()).collect(),
        weights: est.weights(),
        beta,
        seed,
        sigma_selection,
        converged: solve.map(|s| s.converged),
        solve,
    };
    write_json(path, &model)
}

pub fn fit(args: FitArgs) -> CliResult {
    let family = parse_kernel(&args.kernel)?;
    let file = fs::File::open(&args.input)
        .map_err(|e| usage(format!("cannot open {}: {e}", args.input.display())))?;
    let dataset = read_dataset_csv(BufReader::new(file))?;
    let points = dataset.points;

    if args.sigma.is_some() && args.sigma_grid.is_some() {
        return Err(usage("--sigma and --sigma-grid are mutually exclusive"));
    }
    let (sigma, sigma_selection) = match args.sigma {
        Some(s) if s > 0.0 => (s, "explicit"),
        Some(s) => return Err(usage(format!("sigma must be positive, got {s}"))),
        None => {
            let grid = match &args.sigma_grid {
                Some(spec) => parse_sigma_grid(spec)?,
                None => default_sigma_grid(),
            };
            (loocv_bandwidth(&points, family, &grid)?, "loocv")
        }
    };
    let spec = KernelSpec::new(family, points.dim(), sigma)?;

    fs::create_dir_all(&args.out)?;
    let model_path = args.out.join("model.json");
    match args.method.as_str() {
        "kde" => {
            let est = fit_kde(&points, &spec)?;
            write_model(&model_path, "kde", &est, None, args.seed, sigma_selection, None)?;
        }
        "spkde" => {
            let opts = SolveOptions { tol: args.tol, max_iter: args.max_iter, initial: None };
            let fit = fit_spkde(&points, &spec, args.beta, &opts)?;
            if !fit.report.converged {
                eprintln!(
                    "warning: solver hit the iteration cap (kkt residual {:.3e})",
                    fit.report.kkt_residual
                );
            }
            write_model(
                &model_path,
                "spkde",
                &fit.estimate,
                Some(args.beta),
                args.seed,
                sigma_selection,
                Some(&fit.report),
            )?;
        }
        "rejkde" => {
            let est = fit_rejkde(&points, &spec, args.reject_fraction)?;
            write_model(&model_path, "rejkde", &est, None, args.seed, sigma_selection, None)?;
        }
        other => return Err(usage(format!("unknown method {other:?} (kde|spkde|rejkde)"))),
    }
    println!("wrote {}", model_path.display());
    Ok(())
}

pub fn synth(args: SynthArgs) -> CliResult {
    let mut spec = match (&args.spec_json, &args.scenario) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ContaminationSpec>(&text)
                .map_err(|e| usage(format!("bad scenario spec: {e}")))?
        }
        (None, Some(name)) => scenario_by_name(name)?,
        (None, None) => scenario_by_name("fig4")?,
        (Some(_), Some(_)) => {
            return Err(usage("--scenario and --spec-json are mutually exclusive"))
        }
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(eps) = args.eps {
        spec.eps = eps;
        if eps < 1.0 {
            spec.beta = 1.0 / (1.0 - eps);
        }
    }
    spec.seed = args.seed;
    spec.validate()?;

    fs::create_dir_all(&args.out)?;
    let samples = sample_mixture(&spec)?;
    let mut buf = Vec::new();
    write_labeled_csv(&mut buf, &samples)?;
    fs::write(args.out.join("samples.csv"), buf)?;

    let (lo, hi) = scenario_window(&spec);
    let cells = cells_for(&lo, &hi, args.grid_h);
    let truth = grid_truth(&spec, &lo, &hi, &cells)?;
    write_grid_csv(&args.out.join("f_tar.csv"), &truth.f_tar)?;
    write_grid_csv(&args.out.join("f_con.csv"), &truth.f_con)?;
    write_grid_csv(&args.out.join("f_obs.csv"), &truth.f_obs)?;

    let meta = json!({
        "seed": spec.seed,
        "spec": serde_json::to_value(&spec)?,
        "grid": { "lo": lo, "hi": hi, "h": args.grid_h, "cells": cells },
        "outputs": ["samples.csv", "f_tar.csv", "f_con.csv", "f_obs.csv"],
    });
    write_json(&args.out.join("meta.json"), &meta)?;
    println!("wrote {} samples and 3 grids to {}", samples.len(), args.out.display());
    Ok(())
}

pub fn eval(args: EvalArgs) -> CliResult {
    if !args.data.is_empty() && args.scenario.is_some() {
        return Err(usage("--data and --scenario are mutually exclusive"));
    }
    let methods = args
        .methods
        .iter()
        .map(|m| Method::parse(m).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    if args.seeds == 0 {
        return Err(usage("--seeds must be >= 1"));
    }

    let mut named: Vec<(String, Dataset)> = Vec::new();
    if args.data.is_empty() {
        let name = args.scenario.clone().unwrap_or_else(|| "fig4".to_string());
        let spec = scenario_by_name(&name)?;
        let pool = sample_pool(&spec, args.pool_n0, args.pool_n1, args.seed)?;
        let labels: Vec<u8> = pool
            .iter()
            .map(|s| (s.source == SampleSource::Contaminant) as u8)
            .collect();
        let points = samples_to_points(&pool)?;
        named.push((name, Dataset { points, labels: Some(labels) }));
    } else {
        for path in &args.data {
            let file = fs::File::open(path)
                .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
            let ds = read_dataset_csv(BufReader::new(file))?;
            if ds.labels.is_none() {
                return Err(usage(format!(
                    "{} has no label column; eval needs labeled data",
                    path.display()
                )));
            }
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".to_string());
            named.push((name, ds));
        }
    }

    let config = BenchmarkConfig {
        eps_list: args.eps.clone(),
        methods: methods.clone(),
        seeds: (args.seed..args.seed + args.seeds as u64).collect(),
        n0: args.n0,
        beta: args.beta,
        reject_fraction: args.reject_fraction,
        sigma_grid: match &args.sigma_grid {
            Some(s) => parse_sigma_grid(s)?,
            None => default_sigma_grid(),
        },
        family: parse_kernel(&args.kernel)?,
        solve: SolveOptions { tol: args.tol, max_iter: args.max_iter, initial: None },
    };

    fs::create_dir_all(&args.out)?;
    let mut reports = Vec::new();
    for (name, dataset) in &named {
        let report = benchmark_run(dataset, name, &config)?;
        write_json(&args.out.join(format!("report_{name}.json")), &report)?;
        let mut csv = Vec::new();
        report.write_flat_csv(&mut csv).map_err(CliError::from)?;
        fs::write(args.out.join(format!("report_{name}.csv")), csv)?;
        println!("wrote report for {name}");
        reports.push(report);
    }

    if args.wilcoxon {
        for i in 0..methods.len() {
            for j in (i + 1)..methods.len() {
                let cmp = compare_methods(&reports, methods[i], methods[j])?;
                let stem =
                    format!("wilcoxon_{}_vs_{}", methods[i].name(), methods[j].name());
                write_json(&args.out.join(format!("{stem}.json")), &cmp)?;
                let mut csv = Vec::new();
                cmp.write_csv(&mut csv).map_err(CliError::from)?;
                fs::write(args.out.join(format!("{stem}.csv")), csv)?;
                println!("wrote {stem}");
            }
        }
    }
    Ok(())
}

pub fn oracle(args: OracleArgs) -> CliResult {
    let (input, scenario_truth) = match (&args.grid, &args.scenario) {
        (Some(path), None) => {
            let file = fs::File::open(path)
                .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
            (GridDensity::read_csv(BufReader::new(file))?, None)
        }
        (None, Some(name)) => {
            let spec = scenario_by_name(name)?;
            let (lo, hi) = scenario_window(&spec);
            let cells = cells_for(&lo, &hi, args.grid_h);
            let truth = grid_truth(&spec, &lo, &hi, &cells)?;
            (truth.f_obs, Some(truth.f_tar))
        }
        _ => return Err(usage("exactly one of --grid or --scenario is required")),
    };

    let (result, transform) = match (args.beta, args.eps) {
        (Some(beta), None) => {
            if !(beta > 1.0) {
                return Err(usage(format!("--beta must exceed 1, got {beta}")));
            }
            (slice_transform(&input, beta, MASS_TOL)?, json!({ "beta": beta }))
        }
        (None, Some(eps)) => {
            if !(0.0..1.0).contains(&eps) {
                return Err(usage(format!("--eps must lie in [0, 1), got {eps}")));
            }
            (decontaminate(&input, eps)?, json!({ "eps": eps }))
        }
        _ => return Err(usage("exactly one of --beta or --eps is required")),
    };

    let truth = match &args.truth {
        Some(path) => {
            let file = fs::File::open(path)
                .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
            Some(GridDensity::read_csv(BufReader::new(file))?)
        }
        None => scenario_truth,
    };
    let l1_to_truth = match &truth {
        Some(t) => Some(lp_distance(&result.density, t, 1).map_err(CliError::from)?),
        None => None,
    };

    fs::create_dir_all(&args.out)?;
    write_grid_csv(&args.out.join("sliced.csv"), &result.density)?;
    let summary = json!({
        "alpha": result.alpha,
        "mass_error": result.mass_error,
        "transform": transform,
        "l1_to_truth": l1_to_truth,
    });
    write_json(&args.out.join("oracle.json"), &summary)?;
    println!("alpha = {}", result.alpha);
    Ok(())
}
