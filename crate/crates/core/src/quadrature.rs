//! Adaptive Gauss-Legendre quadrature.

use std::f64::consts::PI;
use std::sync::OnceLock;

const ORDER: usize = 12;
const MAX_DEPTH: u32 = 30;

/// Nodes and weights of the `ORDER`-point rule on `[-1, 1]`, found by Newton
/// iteration on the Legendre polynomial.
fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        (0..n)
            .map(|i| {
                let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let k = k as f64;
                        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    })
}

fn panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * rule()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

fn adapt(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m);
    let right = panel(f, m, b);
    let refined = left + right;
    if depth >= MAX_DEPTH || (refined - whole).abs() <= tol.max(1e-15 * refined.abs()) {
        return refined;
    }
    adapt(f, a, m, left, 0.5 * tol, depth + 1) + adapt(f, m, b, right, 0.5 * tol, depth + 1)
}

/// `∫_a^b f` to roughly `rel_tol` relative accuracy (absolute floor 1e-300).
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    // coarse pass to set the absolute target
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    let coarse: Vec<f64> = (0..pieces)
        .map(|i| panel(&mut f, a + i as f64 * h, a + (i + 1) as f64 * h))
        .collect();
    let scale = coarse.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
    let tol = rel_tol * scale / pieces as f64;
    coarse
        .iter()
        .enumerate()
        .map(|(i, &c)| adapt(&mut f, a + i as f64 * h, a + (i + 1) as f64 * h, c, tol, 0))
        .sum()
}

/// `∫_{−∞}^{∞} f` for an integrand decaying away from `center` on the length
/// scale `width`, via `x = center + width · t/(1 − t²)`.
pub fn integrate_real_line(
    mut f: impl FnMut(f64) -> f64,
    center: f64,
    width: f64,
    rel_tol: f64,
) -> f64 {
    integrate(
        |t| {
            let d = 1.0 - t * t;
            let x = center + width * t / d;
            let jac = width * (1.0 + t * t) / (d * d);
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        -1.0,
        1.0,
        rel_tol,
    )
}

/// `∫_0^∞ f` via `x = t/(1 − t)`.
pub fn integrate_half_line(mut f: impl FnMut(f64) -> f64, width: f64, rel_tol: f64) -> f64 {
    integrate(
        |t| {
            let d = 1.0 - t;
            let v = f(width * t / d) * width / (d * d);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        rel_tol,
    )
}
