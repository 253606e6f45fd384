//! Shared test oracles. These stay independent of the library's
//! closed-form code paths: plain composite Simpson quadrature, with a
//! tangent substitution for the heavy-tailed kernels.

use spkde::kernels::{kernel_eval, KernelFamily, KernelSpec};

/// Composite Simpson rule with `2 * panels + 1` nodes.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = 2 * panels;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn kernel_product_1d(spec: &KernelSpec, x: f64, y: f64, t: f64) -> f64 {
    kernel_eval(spec, &[t], &[x]).unwrap() * kernel_eval(spec, &[t], &[y]).unwrap()
}

/// `int k(t, x) k(t, y) dt` over the line by quadrature.
pub fn gram_quadrature_1d(spec: &KernelSpec, x: f64, y: f64) -> f64 {
    match spec.family {
        KernelFamily::Gaussian => {
            let s = spec.bandwidth;
            let (lo, hi) = (x.min(y) - 12.0 * s, x.max(y) + 12.0 * s);
            simpson(|t| kernel_product_1d(spec, x, y, t), lo, hi, 12_000)
        }
        KernelFamily::Cauchy => {
            // t = tan(u) maps the line onto (-pi/2, pi/2)
            let half = std::f64::consts::FRAC_PI_2;
            simpson(
                |u| {
                    let t = u.tan();
                    let jac = 1.0 + t * t;
                    kernel_product_1d(spec, x, y, t) * jac
                },
                -half + 1e-9,
                half - 1e-9,
                60_000,
            )
        }
    }
}

/// `int k(t, x) k(t, y) dt` over the plane by tensor-product quadrature.
pub fn gram_quadrature_2d(spec: &KernelSpec, x: [f64; 2], y: [f64; 2]) -> f64 {
    let eval = |t0: f64, t1: f64| {
        kernel_eval(spec, &[t0, t1], &x).unwrap() * kernel_eval(spec, &[t0, t1], &y).unwrap()
    };
    match spec.family {
        KernelFamily::Gaussian => {
            let s = spec.bandwidth;
            let bounds = |ax: usize| {
                let (a, b) = (x[ax].min(y[ax]), x[ax].max(y[ax]));
                (a - 10.0 * s, b + 10.0 * s)
            };
            let (lo0, hi0) = bounds(0);
            let (lo1, hi1) = bounds(1);
            simpson(
                |t0| simpson(|t1| eval(t0, t1), lo1, hi1, 700),
                lo0,
                hi0,
                700,
            )
        }
        KernelFamily::Cauchy => {
            let half = std::f64::consts::FRAC_PI_2;
            let inner = |t0: f64| {
                simpson(
                    |u1: f64| {
                        let t1 = u1.tan();
                        eval(t0, t1) * (1.0 + t1 * t1)
                    },
                    -half + 1e-9,
                    half - 1e-9,
                    1500,
                )
            };
            simpson(
                |u0: f64| {
                    let t0 = u0.tan();
                    inner(t0) * (1.0 + t0 * t0)
                },
                -half + 1e-9,
                half - 1e-9,
                1500,
            )
        }
    }
}
