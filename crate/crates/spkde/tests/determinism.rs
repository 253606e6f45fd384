//! The parallel build must produce bit-identical numbers regardless of
//! thread count: every cell is computed independently and reductions use
//! fixed pairwise trees.

#![cfg(feature = "parallel")]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use spkde::grid::{grid_from_estimate, slice_transform, GridDensity, MASS_TOL};
use spkde::kernels::{estimate_eval, gram_matrix, KernelSpec, Points, WeightedDensityEstimate};
use spkde::solver::{build_qp, solve_pgd, SolveOptions};

fn random_points(n: usize, dim: usize, seed: u64) -> Points {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    Points::from_flat(data, dim).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn gram_matrix_bits_equal_across_thread_counts() {
    let pts = random_points(120, 2, 7);
    let spec = KernelSpec::cauchy(2, 0.4).unwrap();
    let one = in_pool(1, || gram_matrix(&pts, &spec).unwrap());
    let four = in_pool(4, || gram_matrix(&pts, &spec).unwrap());
    for (a, b) in one.as_slice().iter().zip(four.as_slice()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn estimate_eval_bits_equal_across_thread_counts() {
    let pts = random_points(80, 1, 8);
    let spec = KernelSpec::gaussian(1, 0.3).unwrap();
    let est = WeightedDensityEstimate::uniform(pts, spec).unwrap();
    let queries = random_points(513, 1, 9);
    let one = in_pool(1, || estimate_eval(&est, &queries).unwrap());
    let three = in_pool(3, || estimate_eval(&est, &queries).unwrap());
    for (a, b) in one.iter().zip(&three) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn solver_and_slice_bits_equal_across_thread_counts() {
    let pts = random_points(60, 1, 10);
    let spec = KernelSpec::gaussian(1, 0.35).unwrap();
    let qp = build_qp(&pts, &spec, 1.5).unwrap();
    let opts = SolveOptions { tol: 1e-7, max_iter: 100_000, initial: None };
    let run = || {
        let report = solve_pgd(&qp, &opts).unwrap();
        let est = WeightedDensityEstimate::new(
            pts.clone(),
            report.weights.as_slice().to_vec(),
            spec,
        )
        .unwrap();
        let grid = grid_from_estimate(&est, &[-4.0], &[4.0], 0.01).unwrap();
        let sliced = slice_transform(
            &GridDensity::new(
                grid.density.origin().to_vec(),
                grid.density.cell_size().to_vec(),
                grid.density.cells().to_vec(),
                grid.density.values().to_vec(),
                false,
            )
            .unwrap()
            .renormalize()
            .unwrap(),
            1.25,
            MASS_TOL,
        )
        .unwrap();
        (report.weights.into_vec(), sliced.alpha, sliced.density.values().to_vec())
    };
    let (w1, a1, v1) = in_pool(1, run);
    let (w2, a2, v2) = in_pool(4, run);
    assert_eq!(a1.to_bits(), a2.to_bits());
    for (x, y) in w1.iter().zip(&w2).chain(v1.iter().zip(&v2)) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}
