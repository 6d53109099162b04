//! Sample statistics for correlated time series.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// A mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            stderr: 0.0,
        }
    }

    /// Number of standard errors separating `self` from `value`.
    pub fn z_score(&self, value: f64) -> f64 {
        (self.mean - value).abs() / self.stderr
    }

    /// Separation from another estimate in combined standard errors.
    pub fn separation(&self, other: &Estimate) -> f64 {
        (self.mean - other.mean) / self.stderr.hypot(other.stderr)
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Default number of batches used by [`batch_means`].
pub const DEFAULT_BATCHES: usize = 25;

/// Mean with a standard error from non-overlapping batch averages, which
/// accounts for serial correlation shorter than the batch length.
pub fn batch_means(x: &[f64], batches: usize) -> Estimate {
    let n = x.len();
    let m = mean(x);
    if n < 2 {
        return Estimate {
            mean: m,
            stderr: f64::NAN,
        };
    }
    let batches = batches.clamp(2, n);
    let len = n / batches;
    if len < 2 {
        return Estimate {
            mean: m,
            stderr: (variance(x) / n as f64).sqrt(),
        };
    }
    let averages: Vec<f64> = x.chunks_exact(len).take(batches).map(mean).collect();
    Estimate {
        mean: m,
        stderr: (variance(&averages) / batches as f64).sqrt(),
    }
}

/// Normalized autocorrelation `ρ(0..=max_lag)`, computed by FFT.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let m = mean(x);
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = x
        .iter()
        .map(|v| Complex64::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    (0..=max_lag.min(n - 1))
        .map(|lag| {
            if c0 <= 0.0 {
                if lag == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                buf[lag].re / c0
            }
        })
        .collect()
}

/// Integrated autocorrelation time `1 + 2 Σ ρ(t)` in units of the sampling
/// interval, using the self-consistent window `W ≥ 5 τ`.
pub fn integrated_autocorrelation_time(x: &[f64]) -> f64 {
    let rho = autocorrelation(x, x.len() / 4);
    let mut tau = 1.0;
    for (w, r) in rho.iter().enumerate().skip(1) {
        tau += 2.0 * r;
        if w as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

/// Smallest lag at which the autocorrelation drops below `threshold`.
pub fn decorrelation_lag(x: &[f64], threshold: f64) -> Option<usize> {
    autocorrelation(x, x.len() / 2)
        .iter()
        .position(|&r| r < threshold)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    ks_two_sample_sorted(&a, &b)
}

/// [`ks_two_sample`] for inputs already sorted ascending.
pub fn ks_two_sample_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic coefficient `c(α) = √(−ln(α/2)/2)` of the KS critical value.
pub fn ks_coefficient(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

/// Two-sample critical value at significance `level`.
pub fn ks_critical_two_sample(level: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_coefficient(level) * ((n + m) / (n * m)).sqrt()
}

/// One-sample critical value at significance `level`.
pub fn ks_critical_one_sample(level: f64, n: usize) -> f64 {
    ks_coefficient(level) / (n as f64).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}
