//! Run configuration, one TOML document per run.
//!
//! ```toml
//! [chain]
//! n_particles = 8
//! alpha = 5.0
//!
//! [sampler]
//! temperature = 1.0
//! beads = 16
//! seed = 42
//! ```
//!
//! Every other section and key has a default. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use qfpu::harmonic_oracle::Regime;
use qfpu::model::ChainSpec;
use qfpu::pimd_sampler::{SamplerConfig, DEFAULT_SAMPLES};
use qfpu::rpmd::Observable;
use qfpu::thermostat::NhcParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Version stamped on every JSON output and accepted in configs.
pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub chain: ChainSection,
    pub sampler: SamplerSection,
    #[serde(default)]
    pub thermostat: NhcParams,
    #[serde(default)]
    pub rpmd: RpmdSection,
    #[serde(default)]
    pub estimators: EstimatorSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub n_particles: usize,
    pub alpha: f64,
    /// Defaults to `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub allow_unequal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub temperature: f64,
    pub beads: usize,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_burn: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    #[serde(default = "default_tune_steps")]
    pub tune_steps: u64,
    #[serde(default = "default_pilot_steps")]
    pub pilot_steps: u64,
    #[serde(default = "default_drift_tolerance")]
    pub drift_tolerance: f64,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn one() -> usize {
    1
}
fn default_tune_steps() -> u64 {
    2000
}
fn default_pilot_steps() -> u64 {
    20_000
}
fn default_drift_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RpmdSection {
    /// `q4`, `eta1`, `linear:…`; empty selects the particle of `zeta_particle`.
    pub observables: Vec<String>,
    pub t_max: f64,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Particle whose ζ coefficients are reported; defaults to `N/2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_particle: Option<usize>,
    /// Use at most this many snapshots as initial conditions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_initial: Option<usize>,
}

impl Default for RpmdSection {
    fn default() -> Self {
        RpmdSection {
            observables: Vec::new(),
            t_max: 1.4,
            points: 29,
            dt: None,
            zeta_particle: None,
            max_initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    /// Particle subsets to histogram; empty means every single particle.
    pub particles: Vec<Vec<usize>>,
    /// Bins per dimension; unset means Freedman-Diaconis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Significance of the Kolmogorov-Smirnov diagnostics.
    pub level: f64,
    pub kappa_max: f64,
    pub kappa_points: usize,
    /// Particles with force sections; empty means both boundary particles.
    pub force_particles: Vec<usize>,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        EstimatorSection {
            particles: Vec::new(),
            bins: None,
            level: 0.01,
            kappa_max: 10.0,
            kappa_points: 101,
            force_particles: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub regime: Regime,
    pub q_min: f64,
    pub q_max: f64,
    pub q_points: usize,
    pub t_max: f64,
    pub t_points: usize,
    /// Temperatures for the quartic single-site curve; empty means 61
    /// log-spaced points on `[0.01, 100]`.
    pub temperatures: Vec<f64>,
    pub epsilon: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            regime: Regime::Quantum,
            q_min: -3.0,
            q_max: 3.0,
            q_points: 241,
            t_max: 10.0,
            t_points: 201,
            temperatures: Vec::new(),
            epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("qfpu-run"),
        }
    }
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("invalid `{field}`: {reason}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn chain_spec(&self) -> Result<ChainSpec, CliError> {
        let c = &self.chain;
        ChainSpec::with_coefficients(
            c.n_particles,
            c.alpha,
            c.beta.unwrap_or(c.alpha),
            c.allow_unequal,
        )
        .map_err(|e| CliError::Validation(format!("chain: {e}")))
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig, CliError> {
        let s = &self.sampler;
        let mut c = SamplerConfig::new(self.chain_spec()?, s.temperature, s.beads);
        c.n_samples = s.n_samples;
        c.seed = s.seed;
        c.replicas = s.replicas;
        c.dt = s.dt;
        c.n_burn = s.n_burn;
        c.stride = s.stride;
        c.tune_steps = s.tune_steps;
        c.pilot_steps = s.pilot_steps;
        c.drift_tolerance = s.drift_tolerance;
        c.nhc = self.thermostat;
        c.validate()
            .map_err(|e| CliError::Validation(format!("sampler: {e}")))?;
        Ok(c)
    }

    pub fn zeta_particle(&self) -> usize {
        self.rpmd
            .zeta_particle
            .unwrap_or((self.chain.n_particles / 2).max(1))
    }

    pub fn observables(&self) -> Result<Vec<Observable>, CliError> {
        if self.rpmd.observables.is_empty() {
            return Ok(vec![Observable::Position(self.zeta_particle())]);
        }
        let n = self.chain.n_particles;
        self.rpmd
            .observables
            .iter()
            .map(|s| {
                let o: Observable = s.parse().map_err(|e| invalid("rpmd.observables", e))?;
                o.weights(n).map_err(|e| invalid("rpmd.observables", e))?;
                Ok(o)
            })
            .collect()
    }

    pub fn particle_subsets(&self) -> Vec<Vec<usize>> {
        if self.estimators.particles.is_empty() {
            (1..=self.chain.n_particles).map(|j| vec![j]).collect()
        } else {
            self.estimators.particles.clone()
        }
    }

    pub fn force_particles(&self) -> Vec<usize> {
        if self.estimators.force_particles.is_empty() {
            let mut v = vec![1, self.chain.n_particles];
            v.dedup();
            v
        } else {
            self.estimators.force_particles.clone()
        }
    }

    pub fn quartic_temperatures(&self) -> Vec<f64> {
        if self.oracle.temperatures.is_empty() {
            (0..=60)
                .map(|i| 10f64.powf(-2.0 + i as f64 / 15.0))
                .collect()
        } else {
            self.oracle.temperatures.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        self.sampler_config()?;
        let n = self.chain.n_particles;
        self.observables()?;
        let r = &self.rpmd;
        if !(r.t_max.is_finite() && r.t_max > 0.0) {
            return Err(invalid("rpmd.t_max", "must be positive"));
        }
        if r.points < 2 {
            return Err(invalid("rpmd.points", "need at least two time points"));
        }
        if let Some(dt) = r.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(invalid("rpmd.dt", "must be positive"));
            }
        }
        let zp = self.zeta_particle();
        if zp == 0 || zp > n {
            return Err(invalid(
                "rpmd.zeta_particle",
                format!("must lie in 1..={n}"),
            ));
        }
        if r.max_initial == Some(0) {
            return Err(invalid("rpmd.max_initial", "must be at least 1"));
        }
        let e = &self.estimators;
        for subset in self.particle_subsets() {
            if subset.is_empty() || subset.len() > 3 {
                return Err(invalid(
                    "estimators.particles",
                    "subsets hold one to three particles",
                ));
            }
            if subset.iter().any(|&j| j == 0 || j > n) {
                return Err(invalid(
                    "estimators.particles",
                    format!("indices must lie in 1..={n}"),
                ));
            }
        }
        if self.force_particles().iter().any(|&j| j == 0 || j > n) {
            return Err(invalid(
                "estimators.force_particles",
                format!("indices must lie in 1..={n}"),
            ));
        }
        if e.bins == Some(0) {
            return Err(invalid("estimators.bins", "must be at least 1"));
        }
        if !(e.level > 0.0 && e.level < 1.0) {
            return Err(invalid("estimators.level", "must lie in (0, 1)"));
        }
        if !(e.kappa_max.is_finite() && e.kappa_max > 0.0) || e.kappa_points < 2 {
            return Err(invalid(
                "estimators.kappa_max",
                "need a positive range and two points",
            ));
        }
        let o = &self.oracle;
        if !(o.q_min < o.q_max) || o.q_points < 2 {
            return Err(invalid("oracle.q_min", "need q_min < q_max and two points"));
        }
        if !(o.t_max.is_finite() && o.t_max > 0.0) || o.t_points < 2 {
            return Err(invalid(
                "oracle.t_max",
                "need a positive range and two points",
            ));
        }
        if self
            .quartic_temperatures()
            .iter()
            .any(|&t| !(t > 0.0 && t.is_finite()))
        {
            return Err(invalid("oracle.temperatures", "must be positive"));
        }
        if !(o.epsilon > 0.0 && o.epsilon < 1.0) {
            return Err(invalid("oracle.epsilon", "must lie in (0, 1)"));
        }
        Ok(())
    }
}
