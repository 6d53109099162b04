//! Ring-polymer molecular dynamics and short-time correlation coefficients.
//!
//! Real-time trajectories use unit bead masses, spring constant `P² T²`,
//! the full potential on every bead and no thermostat. Initial positions
//! come from a [`SampleSet`] at temperature `T`; momenta are redrawn at
//! temperature `P T` for each initial configuration from a random stream
//! keyed by `(seed, sample index)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::{Array2, Axis, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChainSpec, ModeBasis};
use crate::pimd_sampler::SampleSet;
use crate::ring_polymer::{bead_forces_into, rpmd_hamiltonian, Representation, RingPolymerState};
use crate::stats::{batch_means, Estimate, DEFAULT_BATCHES};

/// Above this cubic coefficient the short-time expansion is not expected to
/// describe the dynamics.
pub const ALPHA_WARNING_THRESHOLD: f64 = 1.5;

/// Warning text when `α ≥ 3/2`.
pub fn anharmonicity_warning(spec: &ChainSpec) -> Option<String> {
    (spec.alpha() >= ALPHA_WARNING_THRESHOLD).then(|| {
        format!(
            "alpha = {} is not small compared with the quadratic coefficient; \
             ring-polymer correlations are unreliable for alpha >= 1.5",
            spec.alpha()
        )
    })
}

/// Velocity-Verlet propagator of the primitive ring polymer.
#[derive(Debug, Clone)]
pub struct RpmdIntegrator {
    spec: ChainSpec,
    temperature: f64,
    q: Array2<f64>,
    p: Array2<f64>,
    force: Array2<f64>,
    steps: u64,
}

impl RpmdIntegrator {
    pub fn new(initial: &RingPolymerState, temperature: f64, spec: &ChainSpec) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid("temperature", "must be positive"));
        }
        if initial.n_particles() != spec.n_particles() {
            return Err(Error::LengthMismatch {
                expected: spec.n_particles(),
                found: initial.n_particles(),
            });
        }
        let state = initial.to_primitive();
        let q = state.positions.as_standard_layout().to_owned();
        let p = state.momenta.as_standard_layout().to_owned();
        let mut integrator = RpmdIntegrator {
            spec: *spec,
            temperature,
            force: Array2::zeros(q.dim()),
            q,
            p,
            steps: 0,
        };
        integrator.refresh_force();
        Ok(integrator)
    }

    pub fn positions(&self) -> &Array2<f64> {
        &self.q
    }

    pub fn momenta(&self) -> &Array2<f64> {
        &self.p
    }

    pub fn state(&self) -> RingPolymerState {
        RingPolymerState::from_parts(self.q.clone(), self.p.clone(), Representation::Primitive)
            .expect("matching shapes")
    }

    pub fn energy(&self) -> f64 {
        rpmd_hamiltonian(&self.state(), self.temperature, &self.spec).expect("primitive state")
    }

    /// `−P² T² (2q^k − q^{k−1} − q^{k+1}) − ∂V/∂q^k`.
    fn refresh_force(&mut self) {
        bead_forces_into(self.q.view(), &self.spec, self.force.view_mut());
        let beads = self.q.nrows();
        if beads == 1 {
            return;
        }
        let k = (beads as f64 * self.temperature).powi(2);
        for b in 0..beads {
            let prev = (b + beads - 1) % beads;
            let next = (b + 1) % beads;
            for j in 0..self.q.ncols() {
                let q = self.q[[b, j]];
                self.force[[b, j]] -= k * (2.0 * q - self.q[[prev, j]] - self.q[[next, j]]);
            }
        }
    }

    /// One step of length `dt` (negative values run backwards).
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let h = 0.5 * dt;
        Zip::from(&mut self.p)
            .and(&self.force)
            .for_each(|p, &f| *p += h * f);
        Zip::from(&mut self.q)
            .and(&self.p)
            .for_each(|q, &p| *q += dt * p);
        self.refresh_force();
        Zip::from(&mut self.p)
            .and(&self.force)
            .for_each(|p, &f| *p += h * f);
        self.steps += 1;
        if !self.q.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite {
                context: "ring-polymer dynamics",
                step: self.steps,
            });
        }
        Ok(())
    }

    /// Advance by `duration` in the fewest equal steps no longer than
    /// `|max_dt|`.
    pub fn advance(&mut self, duration: f64, max_dt: f64) -> Result<()> {
        if duration == 0.0 {
            return Ok(());
        }
        let n = (duration.abs() / max_dt.abs()).ceil().max(1.0) as u64;
        let h = duration / n as f64;
        for _ in 0..n {
            self.step(h)?;
        }
        Ok(())
    }
}

/// Bead positions at `0, dt, 2dt, …` up to `t_max` (inclusive when it is a
/// whole number of steps).
pub fn rpmd_trajectory(
    initial: &RingPolymerState,
    temperature: f64,
    spec: &ChainSpec,
    dt: f64,
    t_max: f64,
) -> Result<Vec<Array2<f64>>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let mut integrator = RpmdIntegrator::new(initial, temperature, spec)?;
    let n = (t_max / dt + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(n + 1);
    out.push(integrator.positions().clone());
    for _ in 0..n {
        integrator.step(dt)?;
        out.push(integrator.positions().clone());
    }
    Ok(out)
}

/// Maxwell momenta at temperature `P T` for unit masses.
pub fn thermal_momenta(
    beads: usize,
    n: usize,
    temperature: f64,
    rng: &mut ChaCha8Rng,
) -> Array2<f64> {
    let normal =
        Normal::new(0.0, (beads as f64 * temperature).sqrt()).expect("positive temperature");
    Array2::from_shape_simple_fn((beads, n), || normal.sample(rng))
}

/// Random stream for the momenta of initial condition `index`.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Observables of a chain configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// Displacement `q_j`, 1-based.
    Position(usize),
    /// Normal-mode coordinate `η_j`, 1-based.
    Mode(usize),
    /// `Σ_j c_j q_j`.
    Linear(Vec<f64>),
    /// `q_j^k`; only `k = 1` is linear.
    Power { particle: usize, exponent: u32 },
}

impl Observable {
    /// Coefficients `c` with `A(q) = c · q`, or an error for nonlinear
    /// observables.
    pub fn weights(&self, n: usize) -> Result<Vec<f64>> {
        let check = |j: usize| {
            if j == 0 || j > n {
                Err(Error::IndexOutOfRange { index: j, n })
            } else {
                Ok(())
            }
        };
        match self {
            Observable::Position(j)
            | Observable::Power {
                particle: j,
                exponent: 1,
            } => {
                check(*j)?;
                let mut c = vec![0.0; n];
                c[j - 1] = 1.0;
                Ok(c)
            }
            Observable::Mode(j) => {
                check(*j)?;
                let basis = ModeBasis::new(n);
                Ok((1..=n).map(|l| basis.kernel(*j, l)).collect())
            }
            Observable::Linear(c) => {
                if c.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        found: c.len(),
                    });
                }
                Ok(c.clone())
            }
            Observable::Power { .. } => Err(Error::NonlinearObservable(self.to_string())),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Position(j) => write!(f, "q{j}"),
            Observable::Mode(j) => write!(f, "eta{j}"),
            Observable::Linear(c) => {
                let parts: Vec<String> = c.iter().map(|x| format!("{x:?}")).collect();
                write!(f, "linear:{}", parts.join(","))
            }
            Observable::Power { particle, exponent } => write!(f, "q{particle}^{exponent}"),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    /// `q4`, `eta2`, `q4^2` or `linear:c1,c2,…`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("observable", format!("cannot parse `{s}`"));
        if let Some(rest) = s.strip_prefix("linear:") {
            let c = rest
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Observable::Linear(c));
        }
        if let Some(rest) = s.strip_prefix("eta") {
            return rest.parse().map(Observable::Mode).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix('q') {
            if let Some((j, k)) = rest.split_once('^') {
                let particle = j.parse().map_err(|_| bad())?;
                let exponent = k.parse().map_err(|_| bad())?;
                return Ok(Observable::Power { particle, exponent });
            }
            return rest.parse().map(Observable::Position).map_err(|_| bad());
        }
        Err(bad())
    }
}

/// Static coefficients of `K(t) = Σ_n (−1)^n ζ_{2n} t^{2n}/(2n)!`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaSet {
    pub zeta0: Estimate,
    /// Always exactly `T`.
    pub zeta2: Estimate,
    pub zeta4: Estimate,
    pub zeta6: Estimate,
}

impl ZetaSet {
    pub fn means(&self) -> [f64; 4] {
        [
            self.zeta0.mean,
            self.zeta2.mean,
            self.zeta4.mean,
            self.zeta6.mean,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub n_particles: usize,
    pub beads: usize,
    pub temperature: f64,
    pub alpha: f64,
    pub observable: String,
}

/// Estimated Kubo-transformed autocorrelation on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub zeta: Option<ZetaSet>,
    pub meta: SeriesMeta,
}

impl CorrelationSeries {
    /// Columns `t,K,K_stderr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "K", "K_stderr"])?;
        for ((t, k), s) in self.times.iter().zip(&self.values).zip(&self.stderr) {
            w.write_record([format!("{t:?}"), format!("{k:?}"), format!("{s:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn estimate(&self, i: usize) -> Estimate {
        Estimate {
            mean: self.values[i],
            stderr: self.stderr[i],
        }
    }
}

/// Settings of the real-time segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KuboConfig {
    /// Largest integration step.
    pub dt: f64,
    pub seed: u64,
}

/// `min(0.01, 0.1/(P T))`, a fraction of the fastest ring-polymer period.
pub fn default_rpmd_dt(beads: usize, temperature: f64) -> f64 {
    (0.1 / (beads as f64 * temperature)).min(0.01)
}

fn bead_average(q: &Array2<f64>, c: &[f64]) -> f64 {
    q.axis_iter(Axis(0))
        .map(|row| row.iter().zip(c).map(|(x, w)| x * w).sum::<f64>())
        .sum::<f64>()
        / q.nrows() as f64
}

/// Estimate `⟨A_P(0) A_P(t)⟩` for each observable on `times`, averaged over
/// all snapshots. Times must be sorted; negative times are reached by
/// integrating backwards from the same initial condition.
pub fn kubo_autocorrelation(
    samples: &SampleSet,
    observables: &[Observable],
    times: &[f64],
    config: KuboConfig,
) -> Result<Vec<CorrelationSeries>> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("times", "must be sorted"));
    }
    if !(config.dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let spec = samples.chain()?;
    let n = spec.n_particles();
    let (beads, temperature) = (samples.beads(), samples.meta.temperature);
    let weights = observables
        .iter()
        .map(|o| o.weights(n))
        .collect::<Result<Vec<_>>>()?;
    let split = times.partition_point(|&t| t < 0.0);
    let n_t = times.len();

    let products = samples
        .snapshots
        .par_iter()
        .enumerate()
        .map(|(i, q0)| -> Result<Vec<f64>> {
            let mut rng = sample_rng(config.seed, i);
            let p0 = thermal_momenta(beads, n, temperature, &mut rng);
            let state = RingPolymerState::from_parts(q0.clone(), p0, Representation::Primitive)?;
            let a0: Vec<f64> = weights.iter().map(|c| bead_average(q0, c)).collect();
            let mut out = vec![0.0; weights.len() * n_t];
            let mut record = |ti: usize, q: &Array2<f64>| {
                for (o, c) in weights.iter().enumerate() {
                    out[o * n_t + ti] = a0[o] * bead_average(q, c);
                }
            };
            let mut forward = RpmdIntegrator::new(&state, temperature, &spec)?;
            let mut now = 0.0;
            for (ti, &t) in times.iter().enumerate().skip(split) {
                forward.advance(t - now, config.dt)?;
                now = t;
                record(ti, forward.positions());
            }
            let mut backward = RpmdIntegrator::new(&state, temperature, &spec)?;
            let mut now = 0.0;
            for ti in (0..split).rev() {
                backward.advance(times[ti] - now, config.dt)?;
                now = times[ti];
                record(ti, backward.positions());
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut series = Vec::with_capacity(observables.len());
    let mut column = vec![0.0; products.len()];
    for (o, obs) in observables.iter().enumerate() {
        let mut values = Vec::with_capacity(n_t);
        let mut stderr = Vec::with_capacity(n_t);
        for ti in 0..n_t {
            for (c, row) in column.iter_mut().zip(&products) {
                *c = row[o * n_t + ti];
            }
            let e = batch_means(&column, DEFAULT_BATCHES);
            values.push(e.mean);
            stderr.push(e.stderr);
        }
        series.push(CorrelationSeries {
            times: times.to_vec(),
            values,
            stderr,
            zeta: None,
            meta: SeriesMeta {
                n_particles: n,
                beads,
                temperature,
                alpha: spec.alpha(),
                observable: obs.to_string(),
            },
        });
    }
    Ok(series)
}

fn particle_column(q: &Array2<f64>, j: usize) -> impl Iterator<Item = f64> + '_ {
    q.column(j - 1).into_iter().copied()
}

/// `(F_j, ∂F_j/∂q_{j−1}, ∂F_j/∂q_j, ∂F_j/∂q_{j+1})` on one bead, with the
/// derivatives with respect to the walls reported as `None`.
fn force_and_derivatives(
    spec: &ChainSpec,
    row: &[f64],
    j: usize,
) -> (f64, Option<f64>, f64, Option<f64>) {
    let n = row.len();
    let left = if j > 1 { row[j - 2] } else { 0.0 };
    let right = if j < n { row[j] } else { 0.0 };
    let rl = row[j - 1] - left;
    let rr = right - row[j - 1];
    let force = -spec.pair_force(rl) + spec.pair_force(rr);
    let kl = spec.pair_stiffness(rl);
    let kr = spec.pair_stiffness(rr);
    (
        force,
        (j > 1).then_some(kl),
        -kl - kr,
        (j < n).then_some(kr),
    )
}

fn check_particle(samples: &SampleSet, j: usize) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let n = samples.n_particles();
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    Ok(())
}

/// `ζ_0 … ζ_6` of the autocorrelation of `q_{j,P}`.
///
/// `ζ_0 = ⟨q_{j,P}²⟩`, `ζ_2 = T`, `ζ_4 = (1/P) Σ_k ⟨F_j^k F_j^1⟩` and
/// `ζ_6 = (T/P) Σ_k ⟨(∂F_j/∂q_{j−1})² + (∂F_j/∂q_j)² + (∂F_j/∂q_{j+1})²⟩_k`,
/// where derivatives with respect to the fixed walls are absent.
pub fn zeta_coefficients(samples: &SampleSet, j: usize) -> Result<ZetaSet> {
    check_particle(samples, j)?;
    let spec = samples.chain()?;
    let t = samples.meta.temperature;
    let beads = samples.beads() as f64;
    let mut z0 = Vec::with_capacity(samples.len());
    let mut z4 = Vec::with_capacity(samples.len());
    let mut z6 = Vec::with_capacity(samples.len());
    for q in &samples.snapshots {
        let centroid = particle_column(q, j).sum::<f64>() / beads;
        z0.push(centroid * centroid);
        let mut f_mean = 0.0;
        let mut f_first = 0.0;
        let mut curvature = 0.0;
        for (k, row) in q.axis_iter(Axis(0)).enumerate() {
            let row = row.as_slice().expect("contiguous bead row");
            let (f, dl, dc, dr) = force_and_derivatives(&spec, row, j);
            f_mean += f;
            if k == 0 {
                f_first = f;
            }
            curvature += dl.map_or(0.0, |d| d * d) + dc * dc + dr.map_or(0.0, |d| d * d);
        }
        z4.push(f_mean / beads * f_first);
        z6.push(t * curvature / beads);
    }
    Ok(ZetaSet {
        zeta0: batch_means(&z0, DEFAULT_BATCHES),
        zeta2: Estimate::exact(t),
        zeta4: batch_means(&z4, DEFAULT_BATCHES),
        zeta6: batch_means(&z6, DEFAULT_BATCHES),
    })
}

/// `ζ_4` from the double bead sum `(1/P²) Σ_{k,k'} ⟨F_j^k F_j^{k'}⟩`.
pub fn zeta4_double_sum(samples: &SampleSet, j: usize) -> Result<Estimate> {
    check_particle(samples, j)?;
    let spec = samples.chain()?;
    let beads = samples.beads();
    let values: Vec<f64> = samples
        .snapshots
        .iter()
        .map(|q| {
            let forces: Vec<f64> = q
                .axis_iter(Axis(0))
                .map(|row| force_and_derivatives(&spec, row.as_slice().expect("row"), j).0)
                .collect();
            let mut s = 0.0;
            for a in &forces {
                for b in &forces {
                    s += a * b;
                }
            }
            s / (beads * beads) as f64
        })
        .collect();
    Ok(batch_means(&values, DEFAULT_BATCHES))
}

/// `ζ_6` as an average over the joint distribution of
/// `(q_{j−1}, q_j, q_{j+1})`, with every bead of every snapshot contributing
/// one point and the walls entering as fixed zeros.
pub fn zeta6_from_distribution(samples: &SampleSet, j: usize) -> Result<f64> {
    check_particle(samples, j)?;
    let spec = samples.chain()?;
    let n = samples.n_particles();
    let mut cloud: Vec<[f64; 3]> = Vec::with_capacity(samples.len() * samples.beads());
    for q in &samples.snapshots {
        for row in q.axis_iter(Axis(0)) {
            let left = if j > 1 { row[j - 2] } else { 0.0 };
            let right = if j < n { row[j] } else { 0.0 };
            cloud.push([left, row[j - 1], right]);
        }
    }
    let integrand = |x: &[f64; 3]| {
        let kl = spec.pair_stiffness(x[1] - x[0]);
        let kr = spec.pair_stiffness(x[2] - x[1]);
        let mut s = (kl + kr) * (kl + kr);
        if j > 1 {
            s += kl * kl;
        }
        if j < n {
            s += kr * kr;
        }
        s
    };
    let total: f64 = cloud.iter().map(integrand).sum();
    Ok(samples.meta.temperature * total / cloud.len() as f64)
}

/// Monte-Carlo check of `ζ_2 = ⟨(p_{j,P})²⟩` with momenta drawn at `P T`
/// from the same per-sample streams as [`kubo_autocorrelation`].
pub fn zeta2_monte_carlo(samples: &SampleSet, j: usize, seed: u64) -> Result<Estimate> {
    check_particle(samples, j)?;
    let (beads, n, t) = (
        samples.beads(),
        samples.n_particles(),
        samples.meta.temperature,
    );
    let values: Vec<f64> = (0..samples.len())
        .map(|i| {
            let p = thermal_momenta(beads, n, t, &mut sample_rng(seed, i));
            let centroid = p.column(j - 1).sum() / beads as f64;
            centroid * centroid
        })
        .collect();
    Ok(batch_means(&values, DEFAULT_BATCHES))
}

/// `T_6(t) = ζ_0 − ζ_2 t²/2 + ζ_4 t⁴/24 − ζ_6 t⁶/720`.
pub fn t6_expansion(zeta: &[f64; 4], t: f64) -> f64 {
    let t2 = t * t;
    zeta[0] - zeta[1] * t2 / 2.0 + zeta[2] * t2 * t2 / 24.0 - zeta[3] * t2 * t2 * t2 / 720.0
}

/// First `x > 0` with `|cos x − (1 − x²/2 + x⁴/24 − x⁶/720)| = ε`.
fn cosine_horizon(epsilon: f64) -> f64 {
    let err = |x: f64| (x.cos() - t6_expansion(&[1.0, 1.0, 1.0, 1.0], x)).abs() - epsilon;
    let h = 1e-3;
    let mut x = h;
    while err(x) < 0.0 {
        x += h;
    }
    let (mut lo, mut hi) = (x - h, x);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if err(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `t_ε = min_j x_ε/ω_j`, the time after which the sixth-order expansion of
/// some harmonic mode `cos(ω_j t)` is off by `ε`.
pub fn validity_horizon(epsilon: f64, basis: &ModeBasis) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
    }
    let x = cosine_horizon(epsilon);
    Ok(basis
        .frequencies()
        .iter()
        .map(|w| x / w)
        .fold(f64::INFINITY, f64::min))
}

/// `points` equally spaced times on `[0, t_ε]` with `ε = 0.1`.
pub fn default_grid(basis: &ModeBasis, points: usize) -> Result<Vec<f64>> {
    let t_max = validity_horizon(0.1, basis)?;
    let m = points.max(2) - 1;
    Ok((0..=m).map(|i| t_max * i as f64 / m as f64).collect())
}
