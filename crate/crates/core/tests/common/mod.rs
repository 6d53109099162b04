//! Reference computations that share no code with the library.

#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use qfpu::model::ChainSpec;
use qfpu::pimd_sampler::{run, SampleSet, SamplerConfig};

/// Adaptive Simpson rule with Richardson correction.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `∫ q^{2k} e^{−(q² + α q⁴/2)/T} dq` over the real line.
pub fn quartic_site_integral(temperature: f64, alpha: f64, k: i32) -> f64 {
    let energy = |q: f64| (q * q + 0.5 * alpha * q.powi(4)) / temperature;
    let mut cut = 1.0;
    while energy(cut) < 80.0 {
        cut *= 1.5;
    }
    let f = move |q: f64| q.powi(2 * k) * (-energy(q)).exp();
    // integrand is even; split so the peak is resolved
    let pieces = 64;
    let h = cut / pieces as f64;
    let mut total = 0.0;
    for i in 0..pieces {
        total += simpson(&f, i as f64 * h, (i + 1) as f64 * h, 1e-16);
    }
    2.0 * total
}

/// Thermal density of one oscillator built from normalized Hermite functions,
/// `(1 − e^{−ω/T}) Σ_{n<levels} |ψ_n(η)|² e^{−nω/T}`.
pub fn hermite_density(omega: f64, temperature: f64, eta: f64, levels: usize) -> f64 {
    let x = omega.sqrt() * eta;
    let ground = (omega / PI).powf(0.25) * (-0.5 * x * x).exp();
    let (mut prev, mut cur) = (0.0, ground);
    let boltz = (-omega / temperature).exp();
    let mut sum = 0.0;
    let mut weight = 1.0;
    for n in 0..levels {
        sum += weight * cur * cur;
        let nf = n as f64;
        let next = ((2.0 / (nf + 1.0)).sqrt() * x * cur) - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        weight *= boltz;
    }
    (1.0 - boltz) * sum
}

/// Hessian of the harmonic ring-polymer potential
/// `Σ_k [P²T² (q^{k+1} − q^k)²/2 + V(q^k)]` at `α = 0`, indexed `N·k + j`.
pub fn ring_polymer_hessian(n: usize, beads: usize, temperature: f64) -> DMatrix<f64> {
    let dim = n * beads;
    let spring = (beads as f64 * temperature).powi(2);
    let mut h = DMatrix::zeros(dim, dim);
    for k in 0..beads {
        for j in 0..n {
            let i = n * k + j;
            h[(i, i)] += 2.0;
            if j + 1 < n {
                h[(i, i + 1)] -= 1.0;
                h[(i + 1, i)] -= 1.0;
            }
            if beads > 1 {
                let next = n * ((k + 1) % beads) + j;
                h[(i, i)] += spring;
                h[(next, next)] += spring;
                h[(i, next)] -= spring;
                h[(next, i)] -= spring;
            }
        }
    }
    h
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Central finite-difference gradient.
pub fn numerical_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Production settings of one sampled ensemble.
#[derive(Debug, Clone, Copy)]
pub struct Ensemble {
    pub n: usize,
    pub alpha: f64,
    pub temperature: f64,
    pub beads: usize,
    pub dt: f64,
    pub burn: u64,
    pub stride: u64,
    pub samples: usize,
    pub seed: u64,
}

impl Ensemble {
    pub fn config(&self) -> SamplerConfig {
        let chain = ChainSpec::new(self.n, self.alpha).unwrap();
        let mut c = SamplerConfig::new(chain, self.temperature, self.beads);
        c.dt = Some(self.dt);
        c.n_burn = Some(self.burn);
        c.stride = Some(self.stride);
        c.n_samples = self.samples;
        c.seed = self.seed;
        c.nhc.respa_steps = 1;
        c
    }
}

/// Sample sets shared between criteria; each ensemble is generated once.
pub fn ensemble(e: Ensemble) -> Arc<SampleSet> {
    type Slot = Arc<OnceLock<Arc<SampleSet>>>;
    static CACHE: OnceLock<Mutex<HashMap<String, Slot>>> = OnceLock::new();
    let key = format!("{e:?}");
    let slot = CACHE
        .get_or_init(Default::default)
        .lock()
        .unwrap()
        .entry(key)
        .or_default()
        .clone();
    slot.get_or_init(|| Arc::new(run(&e.config()).expect("sampling succeeds")))
        .clone()
}

/// One line of the acceptance log.
pub fn verdict(criterion: &str, passed: bool, detail: impl AsRef<str>) -> bool {
    println!(
        "{} {criterion}: {}",
        if passed { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    passed
}
