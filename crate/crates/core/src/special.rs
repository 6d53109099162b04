//! Modified Bessel functions of real order.
//!
//! `I_ν` uses the ascending series for moderate arguments and the Hankel
//! expansion beyond. `K_ν` uses the reflection formula for small arguments
//! and Steed's continued fraction otherwise. The `_scaled` variants return
//! `e^{−x} I_ν(x)` and `e^{x} K_ν(x)` so that neither overflows.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

const EPS: f64 = 1e-16;
const SERIES_LIMIT: f64 = 25.0;
const CF_LIMIT: f64 = 2.0;

fn i_series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..500 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() < EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// `e^{−x} I_ν(x) √(2πx)` from the Hankel expansion.
fn i_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// `e^{−x} I_ν(x)` for `x > 0`, `ν > −1`.
pub fn bessel_i_scaled(nu: f64, x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        i_series(nu, x) * (-x).exp()
    } else {
        i_asymptotic(nu, x) / (2.0 * PI * x).sqrt()
    }
}

/// `I_ν(x)` for `x > 0`, `ν > −1`.
pub fn bessel_i(nu: f64, x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        i_series(nu, x)
    } else {
        i_asymptotic(nu, x) * x.exp() / (2.0 * PI * x).sqrt()
    }
}

/// `K_μ` for `0 < μ < 1` from `(π/2)(I_{−μ} − I_μ)/sin(μπ)`, small `x`.
fn k_reflection(mu: f64, x: f64) -> f64 {
    0.5 * PI * (i_series(-mu, x) - i_series(mu, x)) / (mu * PI).sin()
}

/// `(e^x K_μ(x), e^x K_{μ+1}(x))` for `|μ| ≤ 1/2` by Steed's method.
fn k_continued_fraction(mu: f64, x: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut c = a1;
    let mut q = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..100_000 {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_next = k_mu * (mu + x + 0.5 - h) / x;
    (k_mu, k_next)
}

/// `e^x K_ν(x)` for `x > 0`. For `x ≤ 2` the order must not be an integer.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    if x > CF_LIMIT {
        let steps = (nu + 0.5).floor();
        let mu = nu - steps;
        let (mut k0, mut k1) = k_continued_fraction(mu, x);
        for i in 1..=steps as usize {
            let k2 = 2.0 * (mu + i as f64) / x * k1 + k0;
            k0 = k1;
            k1 = k2;
        }
        return k0;
    }
    let steps = nu.floor();
    let mu = nu - steps;
    if mu == 0.0 {
        return f64::NAN;
    }
    // K_{μ−1} = K_{1−μ}
    let mut k_prev = k_reflection(1.0 - mu, x);
    let mut k = k_reflection(mu, x);
    for i in 0..steps as usize {
        let order = mu + i as f64;
        let next = k_prev + 2.0 * order / x * k;
        k_prev = k;
        k = next;
    }
    k * x.exp()
}

/// `K_ν(x)` for `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_scaled(nu, x) * (-x).exp()
}
