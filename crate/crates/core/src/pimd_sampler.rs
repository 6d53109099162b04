//! Thermostatted path-integral molecular dynamics in staging coordinates.
//!
//! One step is `NHC(Δt/2) · kick(Δt/2) · drift(Δt) · kick(Δt/2) · NHC(Δt/2)`.
//! The sampler stores staged positions and their conjugate momenta; snapshots
//! are handed out in primitive coordinates.
//!
//! Time step, burn-in and stride are optional. When left unset they are
//! chosen on the fly: the step is halved (or the thermostat substeps raised)
//! until a short pre-run conserves the extended energy. A pilot run then
//! tracks the potential energy and the squared centroid mode coordinates;
//! burn-in is ten integrated autocorrelation times of the slowest of them and
//! the stride is the lag at which its autocorrelation falls below 0.1.

use ndarray::{Array2, Axis, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChainSpec, ModeBasis};
use crate::ring_polymer::{
    bead_forces_into, mean_bead_potential, pimd_hamiltonian, primitive_to_staging_forces,
    unstage_into, Representation, RingPolymerState, StagingMasses,
};
use crate::stats::{decorrelation_lag, integrated_autocorrelation_time};
use crate::thermostat::{NhcParams, NoseHooverChains, ThermostatBank};

/// Conventional production sample count.
pub const DEFAULT_SAMPLES: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub chain: ChainSpec,
    pub temperature: f64,
    pub beads: usize,
    /// `None`: start from [`default_dt`] and tune.
    pub dt: Option<f64>,
    /// `None`: ten autocorrelation times after a pilot run.
    pub n_burn: Option<u64>,
    /// `None`: decorrelation lag of the potential energy.
    pub stride: Option<u64>,
    pub n_samples: usize,
    pub seed: u64,
    pub nhc: NhcParams,
    /// Independent trajectories whose snapshots are concatenated.
    pub replicas: usize,
    /// Length of the energy-conservation pre-run used for tuning.
    pub tune_steps: u64,
    /// Length of the pilot run that fixes burn-in and stride.
    pub pilot_steps: u64,
    /// Largest accepted relative excursion of the extended energy.
    pub drift_tolerance: f64,
}

/// `0.05 / max(1, 2 √P T)`.
pub fn default_dt(beads: usize, temperature: f64) -> f64 {
    0.05 / (2.0 * (beads as f64).sqrt() * temperature).max(1.0)
}

impl SamplerConfig {
    pub fn new(chain: ChainSpec, temperature: f64, beads: usize) -> Self {
        SamplerConfig {
            chain,
            temperature,
            beads,
            dt: None,
            n_burn: None,
            stride: None,
            n_samples: DEFAULT_SAMPLES,
            seed: 0,
            nhc: NhcParams::default(),
            replicas: 1,
            tune_steps: 2000,
            pilot_steps: 20_000,
            drift_tolerance: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid("temperature", "must be positive"));
        }
        if self.beads == 0 {
            return Err(Error::invalid("beads", "must be at least 1"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::invalid("dt", "must be positive"));
            }
        }
        if self.stride == Some(0) {
            return Err(Error::invalid("stride", "must be at least 1"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(Error::invalid("replicas", "must be at least 1"));
        }
        if !(self.drift_tolerance > 0.0) {
            return Err(Error::invalid("drift_tolerance", "must be positive"));
        }
        self.nhc.validate()
    }

    pub fn resolved_dt(&self) -> f64 {
        self.dt
            .unwrap_or_else(|| default_dt(self.beads, self.temperature))
    }
}

/// Parameters a run actually used, echoed with its snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub n_particles: usize,
    pub beads: usize,
    pub temperature: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub dt: f64,
    pub respa_steps: usize,
    pub chain_length: usize,
    pub n_burn: u64,
    pub stride: u64,
}

/// Primitive bead positions (`P × N` each) with the extended energy recorded
/// at every snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub meta: SampleMeta,
    pub snapshots: Vec<Array2<f64>>,
    pub energy: Vec<f64>,
    /// Per snapshot, `p²/μ'` averaged over all degrees of freedom; its mean
    /// is `T` by equipartition.
    pub kinetic_temperature: Vec<f64>,
    /// Snapshot count contributed by each trajectory, in order.
    pub replica_lengths: Vec<usize>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn beads(&self) -> usize {
        self.meta.beads
    }

    pub fn n_particles(&self) -> usize {
        self.meta.n_particles
    }

    pub fn chain(&self) -> Result<ChainSpec> {
        ChainSpec::with_coefficients(self.meta.n_particles, self.meta.alpha, self.meta.beta, true)
    }

    /// Append another set drawn from the same ensemble.
    pub fn merge(&mut self, other: SampleSet) -> Result<()> {
        let a = &self.meta;
        let b = &other.meta;
        if a.n_particles != b.n_particles
            || a.beads != b.beads
            || a.temperature != b.temperature
            || a.alpha != b.alpha
            || a.beta != b.beta
        {
            return Err(Error::invalid(
                "merge",
                "sample sets describe different ensembles",
            ));
        }
        self.snapshots.extend(other.snapshots);
        self.energy.extend(other.energy);
        self.kinetic_temperature.extend(other.kinetic_temperature);
        self.replica_lengths.extend(other.replica_lengths);
        Ok(())
    }

    /// Per-snapshot bead average of `f` applied to each bead row.
    pub fn bead_averaged(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        let inv = 1.0 / self.beads() as f64;
        self.snapshots
            .iter()
            .map(|s| {
                s.axis_iter(Axis(0))
                    .map(|row| f(row.as_slice().expect("contiguous bead row")))
                    .sum::<f64>()
                    * inv
            })
            .collect()
    }

    /// Largest `|H'(t) − H'(0)|/|H'(0)|` within any one trajectory.
    pub fn max_relative_drift(&self) -> f64 {
        let mut start = 0;
        let mut worst: f64 = 0.0;
        for &len in &self.replica_lengths {
            let trace = &self.energy[start..start + len];
            if let Some(&e0) = trace.first() {
                for e in trace {
                    worst = worst.max((e - e0).abs() / e0.abs());
                }
            }
            start += len;
        }
        worst
    }
}

/// A single thermostatted trajectory.
#[derive(Debug, Clone)]
pub struct PimdSampler {
    spec: ChainSpec,
    temperature: f64,
    dt: f64,
    masses: StagingMasses,
    nhc: NoseHooverChains,
    state: RingPolymerState,
    bank: ThermostatBank,
    primitive: Array2<f64>,
    force: Array2<f64>,
    steps: u64,
}

/// Zero displacement, Maxwell momenta with masses `μ'_k` and Maxwell
/// thermostat momenta, all at temperature `T`.
pub fn init_state(
    config: &SamplerConfig,
    nhc: &NoseHooverChains,
    rng: &mut ChaCha8Rng,
) -> (RingPolymerState, ThermostatBank) {
    let (p, n) = (config.beads, config.chain.n_particles());
    let masses = StagingMasses::new(p);
    let mut state = RingPolymerState::zeros(p, n, Representation::Staged);
    for (row, m) in state.momenta.axis_iter_mut(Axis(0)).zip(&masses.kinetic) {
        let normal = Normal::new(0.0, (m * config.temperature).sqrt()).expect("positive width");
        for x in row {
            *x = normal.sample(rng);
        }
    }
    let bank = nhc.init_bank(rng);
    (state, bank)
}

impl PimdSampler {
    /// Fresh trajectory with the given step and thermostat substeps, seeded
    /// from `(seed, stream)`.
    pub fn with_step(
        config: &SamplerConfig,
        dt: f64,
        respa_steps: usize,
        stream: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut params = config.nhc;
        params.respa_steps = respa_steps;
        let nhc = NoseHooverChains::new(
            &params,
            config.temperature,
            config.beads,
            config.chain.n_particles(),
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        let (state, bank) = init_state(config, &nhc, &mut rng);
        let dim = state.positions.dim();
        let mut sampler = PimdSampler {
            spec: config.chain,
            temperature: config.temperature,
            dt,
            masses: StagingMasses::new(config.beads),
            nhc,
            state,
            bank,
            primitive: Array2::zeros(dim),
            force: Array2::zeros(dim),
            steps: 0,
        };
        sampler.refresh_force();
        Ok(sampler)
    }

    pub fn new(config: &SamplerConfig) -> Result<Self> {
        Self::with_step(config, config.resolved_dt(), config.nhc.respa_steps, 0)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn respa_steps(&self) -> usize {
        self.nhc.respa_steps()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Staged positions and momenta.
    pub fn state(&self) -> &RingPolymerState {
        &self.state
    }

    pub fn bank(&self) -> &ThermostatBank {
        &self.bank
    }

    pub fn masses(&self) -> &StagingMasses {
        &self.masses
    }

    /// Current primitive bead positions.
    pub fn primitive_positions(&self) -> &Array2<f64> {
        &self.primitive
    }

    /// Bead-averaged chain potential `(1/P) Σ_k V(q^k)`.
    pub fn potential(&self) -> f64 {
        mean_bead_potential(self.primitive.view(), &self.spec)
    }

    /// `p²/μ'` averaged over all degrees of freedom.
    pub fn kinetic_temperature(&self) -> f64 {
        let mut sum = 0.0;
        for (p, m) in self
            .state
            .momenta
            .axis_iter(Axis(0))
            .zip(&self.masses.kinetic)
        {
            sum += p.iter().map(|x| x * x).sum::<f64>() / m;
        }
        sum / self.state.momenta.len() as f64
    }

    /// `H' = H + Σ [p_η²/(2Q) + T η]`.
    pub fn conserved_energy(&self) -> f64 {
        pimd_hamiltonian(&self.state, self.temperature, &self.spec) + self.nhc.energy(&self.bank)
    }

    /// Unstage the positions and rebuild the total staging force
    /// `−μ_k P T² u − (1/P) ∂V/∂u`.
    fn refresh_force(&mut self) {
        unstage_into(self.state.positions.view(), self.primitive.view_mut());
        bead_forces_into(self.primitive.view(), &self.spec, self.force.view_mut());
        primitive_to_staging_forces(self.force.view_mut());
        let pt2 = self.masses.beads() as f64 * self.temperature * self.temperature;
        for ((mut f, u), mu) in self
            .force
            .axis_iter_mut(Axis(0))
            .zip(self.state.positions.axis_iter(Axis(0)))
            .zip(&self.masses.spring)
        {
            let k = mu * pt2;
            Zip::from(&mut f).and(&u).for_each(|f, &u| *f -= k * u);
        }
    }

    fn kick(&mut self, h: f64) {
        Zip::from(&mut self.state.momenta)
            .and(&self.force)
            .for_each(|p, &f| *p += h * f);
    }

    fn thermostat(&mut self) {
        let dt = self.dt;
        let momenta = self.state.momenta.as_slice_mut().expect("standard layout");
        self.nhc.half_step(momenta, &mut self.bank, dt);
    }

    /// Advance by one time step.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.dt;
        self.thermostat();
        self.kick(0.5 * dt);
        for ((mut u, p), m) in self
            .state
            .positions
            .axis_iter_mut(Axis(0))
            .zip(self.state.momenta.axis_iter(Axis(0)))
            .zip(&self.masses.kinetic)
        {
            let h = dt / m;
            Zip::from(&mut u).and(&p).for_each(|u, &p| *u += h * p);
        }
        self.refresh_force();
        self.kick(0.5 * dt);
        self.thermostat();
        self.steps += 1;
        if !self.primitive.iter().all(|x| x.is_finite())
            || !self.state.momenta.iter().all(|x| x.is_finite())
        {
            return Err(Error::NonFinite {
                context: "path-integral step",
                step: self.steps,
            });
        }
        Ok(())
    }

    /// Run `n` steps and return the largest relative excursion of the
    /// extended energy from its starting value.
    pub fn relative_drift(&mut self, n: u64) -> Result<f64> {
        let e0 = self.conserved_energy();
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            self.step()?;
            worst = worst.max((self.conserved_energy() - e0).abs() / e0.abs());
        }
        Ok(worst)
    }
}

/// Step size and thermostat substeps that keep a pre-run within a quarter of
/// the drift tolerance. Each failure either doubles `n_R` (if that alone
/// halves the drift) or halves `Δt`.
pub fn tune_step(config: &SamplerConfig) -> Result<(f64, usize)> {
    config.validate()?;
    let mut dt = config.resolved_dt();
    let mut respa = config.nhc.respa_steps;
    if config.dt.is_some() {
        return Ok((dt, respa));
    }
    let target = 0.25 * config.drift_tolerance;
    let probe = |dt: f64, respa: usize| -> f64 {
        PimdSampler::with_step(config, dt, respa, 0)
            .and_then(|mut s| s.relative_drift(config.tune_steps))
            .unwrap_or(f64::INFINITY)
    };
    let mut drift = probe(dt, respa);
    for _ in 0..12 {
        if drift < target {
            return Ok((dt, respa));
        }
        let raised = probe(dt, 2 * respa);
        if raised < 0.5 * drift && respa < 64 {
            respa *= 2;
            drift = raised;
        } else {
            dt *= 0.5;
            drift = probe(dt, respa);
        }
    }
    if drift < target {
        Ok((dt, respa))
    } else {
        Err(Error::NonFinite {
            context: "time-step tuning",
            step: config.tune_steps,
        })
    }
}

/// Burn-in and stride from a pilot run of the sampler (which is advanced).
///
/// The potential energy alone is dominated by the fast modes, so the squared
/// centroid mode coordinates are tracked as well and the slowest of all
/// these traces decides.
fn pilot(sampler: &mut PimdSampler, steps: u64) -> Result<(u64, u64)> {
    let n = sampler.spec.n_particles();
    let basis = ModeBasis::new(n);
    let mut traces = vec![Vec::with_capacity(steps as usize); n + 1];
    let mut centroid = vec![0.0; n];
    for _ in 0..steps {
        sampler.step()?;
        traces[0].push(sampler.potential());
        let q = sampler.primitive_positions();
        for (c, col) in centroid.iter_mut().zip(q.axis_iter(Axis(1))) {
            *c = col.mean().unwrap_or(0.0);
        }
        for (j, trace) in traces.iter_mut().enumerate().skip(1) {
            trace.push(basis.mode(j, &centroid).powi(2));
        }
    }
    let (mut tau, mut stride) = (0.0f64, 1usize);
    for trace in &traces {
        let settled = &trace[trace.len() / 2..];
        tau = tau.max(integrated_autocorrelation_time(settled));
        stride = stride.max(decorrelation_lag(settled, 0.1).unwrap_or(settled.len() / 2));
    }
    Ok(((10.0 * tau).ceil() as u64, stride as u64))
}

fn run_replica(
    config: &SamplerConfig,
    dt: f64,
    respa: usize,
    replica: usize,
    count: usize,
) -> Result<(SampleSet, u64, u64)> {
    let mut sampler = PimdSampler::with_step(config, dt, respa, replica as u64)?;
    let (mut n_burn, mut stride) = (config.n_burn.unwrap_or(0), config.stride.unwrap_or(1));
    if config.n_burn.is_none() || config.stride.is_none() {
        let (b, s) = pilot(&mut sampler, config.pilot_steps)?;
        if config.n_burn.is_none() {
            n_burn = config.pilot_steps + b;
        }
        if config.stride.is_none() {
            stride = s;
        }
    }
    while sampler.steps() < n_burn {
        sampler.step()?;
    }
    let mut snapshots = Vec::with_capacity(count);
    let mut energy = Vec::with_capacity(count);
    let mut kinetic_temperature = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..stride {
            sampler.step()?;
        }
        snapshots.push(sampler.primitive_positions().clone());
        energy.push(sampler.conserved_energy());
        kinetic_temperature.push(sampler.kinetic_temperature());
    }
    let meta = SampleMeta {
        n_particles: config.chain.n_particles(),
        beads: config.beads,
        temperature: config.temperature,
        alpha: config.chain.alpha(),
        beta: config.chain.beta(),
        seed: config.seed,
        dt,
        respa_steps: respa,
        chain_length: config.nhc.chain_length,
        n_burn,
        stride,
    };
    Ok((
        SampleSet {
            meta,
            snapshots,
            energy,
            kinetic_temperature,
            replica_lengths: vec![count],
        },
        n_burn,
        stride,
    ))
}

/// Tune, equilibrate and collect `n_samples` snapshots, split evenly over
/// the configured number of independent trajectories.
pub fn run(config: &SamplerConfig) -> Result<SampleSet> {
    config.validate()?;
    let (dt, respa) = tune_step(config)?;
    let r = config.replicas;
    let counts: Vec<usize> = (0..r)
        .map(|i| config.n_samples / r + usize::from(i < config.n_samples % r))
        .filter(|&c| c > 0)
        .collect();
    let parts = counts
        .par_iter()
        .enumerate()
        .map(|(i, &c)| run_replica(config, dt, respa, i, c))
        .collect::<Result<Vec<_>>>()?;
    let mut iter = parts.into_iter();
    let (mut set, _, _) = iter.next().ok_or(Error::EmptySampleSet)?;
    for (other, burn, stride) in iter {
        set.meta.n_burn = set.meta.n_burn.max(burn);
        set.meta.stride = set.meta.stride.max(stride);
        set.merge(other)?;
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{batch_means, DEFAULT_BATCHES};

    fn quick(chain: ChainSpec, t: f64, p: usize) -> SamplerConfig {
        let mut c = SamplerConfig::new(chain, t, p);
        c.dt = Some(0.02);
        c.n_burn = Some(200);
        c.stride = Some(5);
        c.n_samples = 50;
        c.seed = 11;
        c.nhc.respa_steps = 1;
        c
    }

    #[test]
    fn default_step_formula() {
        assert_eq!(default_dt(1, 0.01), 0.05);
        assert!((default_dt(16, 1.0) - 0.05 / 8.0).abs() < 1e-16);
    }

    #[test]
    fn validation() {
        let chain = ChainSpec::new(4, 1.0).unwrap();
        let mut c = quick(chain, 1.0, 4);
        assert!(c.validate().is_ok());
        c.stride = Some(0);
        assert!(c.validate().is_err());
        let mut c = quick(chain, 1.0, 4);
        c.dt = Some(-1.0);
        assert!(c.validate().is_err());
        let mut c = quick(chain, 1.0, 0);
        c.beads = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn initial_state_is_reproducible_and_thermal() {
        let chain = ChainSpec::harmonic(32).unwrap();
        let mut c = quick(chain, 0.7, 64);
        c.seed = 3;
        let a = PimdSampler::new(&c).unwrap();
        let b = PimdSampler::new(&c).unwrap();
        assert_eq!(a.state(), b.state());
        assert_eq!(a.bank(), b.bank());
        assert!(a.state().positions.iter().all(|&x| x == 0.0));
        let m = a.masses();
        let ke: f64 = a
            .state()
            .momenta
            .axis_iter(Axis(0))
            .zip(&m.kinetic)
            .map(|(row, mu)| row.iter().map(|p| p * p / (2.0 * mu)).sum::<f64>())
            .sum();
        let per_dof = ke / (32.0 * 64.0);
        // χ² with 2048 dof: relative s.d. √(2/2048)
        assert!((per_dof / 0.35 - 1.0).abs() < 4.0 * (2.0f64 / 2048.0).sqrt());
    }

    #[test]
    fn hamiltonian_part_is_verlet() {
        // kick/drift/kick without the thermostat against plain Verlet
        let chain = ChainSpec::harmonic(1).unwrap();
        let c = quick(chain, 1.0, 1);
        let mut s = PimdSampler::new(&c).unwrap();
        s.state.positions[[0, 0]] = 0.3;
        s.state.momenta[[0, 0]] = -0.2;
        s.refresh_force();
        let dt = s.dt();
        let w2 = 2.0;
        let (mut q, mut p) = (0.3f64, -0.2f64);
        for _ in 0..10 {
            s.kick(0.5 * dt);
            let m = s.masses.kinetic[0];
            s.state.positions[[0, 0]] += dt * s.state.momenta[[0, 0]] / m;
            s.refresh_force();
            s.kick(0.5 * dt);
            p -= 0.5 * dt * w2 * q;
            q += dt * p;
            p -= 0.5 * dt * w2 * q;
        }
        assert_eq!(s.state.positions[[0, 0]], q);
        assert_eq!(s.state.momenta[[0, 0]], p);
    }

    #[test]
    fn extended_energy_is_conserved() {
        let chain = ChainSpec::new(8, 1.0).unwrap();
        let mut c = quick(chain, 1.0, 8);
        c.nhc.respa_steps = 3;
        let drift = |dt: f64| {
            let mut s = PimdSampler::with_step(&c, dt, 3, 0).unwrap();
            s.relative_drift((0.4 / dt) as u64).unwrap()
        };
        let coarse = drift(0.008);
        let fine = drift(0.004);
        assert!(coarse < 1e-4, "{coarse}");
        assert!(coarse / fine > 3.0, "{coarse} {fine}");
    }

    #[test]
    fn blowup_is_reported() {
        let chain = ChainSpec::new(4, 5.0).unwrap();
        let mut c = quick(chain, 50.0, 1);
        c.dt = Some(5.0);
        let mut s = PimdSampler::new(&c).unwrap();
        let err = (0..1000).try_for_each(|_| s.step());
        assert!(matches!(err, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn runs_are_deterministic() {
        let chain = ChainSpec::new(4, 1.0).unwrap();
        let mut c = quick(chain, 0.5, 4);
        c.replicas = 2;
        c.n_samples = 21;
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 21);
        assert_eq!(a.replica_lengths, vec![11, 10]);
        assert_ne!(a.snapshots[0], a.snapshots[11]);
    }

    #[test]
    fn automatic_parameters() {
        let chain = ChainSpec::harmonic(2).unwrap();
        let mut c = SamplerConfig::new(chain, 1.0, 2);
        c.n_samples = 10;
        c.tune_steps = 300;
        c.pilot_steps = 2000;
        c.drift_tolerance = 1e-4;
        c.nhc.respa_steps = 1;
        let set = run(&c).unwrap();
        assert!(set.meta.dt <= default_dt(2, 1.0));
        assert!(set.meta.stride >= 1);
        assert!(set.meta.n_burn >= 2000);
        assert_eq!(set.len(), 10);
    }

    #[test]
    fn equipartition() {
        let chain = ChainSpec::new(3, 1.0).unwrap();
        let mut c = quick(chain, 0.8, 4);
        c.dt = Some(0.05);
        let mut s = PimdSampler::new(&c).unwrap();
        for _ in 0..2000 {
            s.step().unwrap();
        }
        let mut traces = vec![Vec::new(); 12];
        for _ in 0..40_000 {
            s.step().unwrap();
            let mu = &s.masses().kinetic;
            for (i, p) in s.state().momenta.iter().enumerate() {
                traces[i].push(p * p / mu[i / 3]);
            }
        }
        for t in &traces {
            let e = batch_means(t, DEFAULT_BATCHES);
            assert!(e.z_score(0.8) < 4.0, "{e:?}");
        }
    }

    #[test]
    fn classical_mode_variance() {
        let chain = ChainSpec::harmonic(3).unwrap();
        let mut c = quick(chain, 1.0, 1);
        c.dt = Some(0.05);
        c.n_burn = Some(2000);
        c.stride = Some(10);
        c.n_samples = 8000;
        let set = run(&c).unwrap();
        let basis = ModeBasis::new(3);
        for j in 1..=3 {
            let x = set.bead_averaged(|q| basis.mode(j, q).powi(2));
            let e = batch_means(&x, DEFAULT_BATCHES);
            let exact = 1.0 / basis.frequency(j).powi(2);
            assert!(e.z_score(exact) < 4.0, "j={j} {e:?} {exact}");
        }
        let kin = batch_means(&set.kinetic_temperature, DEFAULT_BATCHES);
        assert!(kin.z_score(1.0) < 4.0, "{kin:?}");
    }

    #[test]
    fn merge_checks_ensemble() {
        let chain = ChainSpec::new(2, 1.0).unwrap();
        let c = quick(chain, 1.0, 2);
        let mut a = run(&c).unwrap();
        let b = run(&c).unwrap();
        a.merge(b.clone()).unwrap();
        assert_eq!(a.len(), 100);
        let mut other = quick(chain, 2.0, 2);
        other.n_samples = 1;
        assert!(a.merge(run(&other).unwrap()).is_err());
    }
}
