//! Closed forms for the harmonic chain and a quartic single-site model.
//!
//! Everything here is exact for `α = β = 0` and serves as ground truth for
//! the samplers. Temperatures are passed as `T`; inverse temperatures never
//! appear in the public API.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModeBasis;
use crate::special::{bessel_i, bessel_k_scaled};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Classical,
    Quantum,
}

/// Thermal equilibrium of the harmonic chain at temperature `T`.
#[derive(Debug, Clone)]
pub struct HarmonicEnsemble {
    basis: ModeBasis,
    temperature: f64,
    regime: Regime,
}

fn check_index(j: usize, n: usize) -> Result<()> {
    if j == 0 || j > n {
        Err(Error::IndexOutOfRange { index: j, n })
    } else {
        Ok(())
    }
}

fn gaussian_density(x: &[f64], cov: &[Vec<f64>]) -> f64 {
    // Cholesky of a small SPD matrix
    let d = x.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for k in 0..=i {
            let s: f64 = (0..k).map(|m| l[i][m] * l[k][m]).sum();
            if i == k {
                l[i][i] = (cov[i][i] - s).sqrt();
            } else {
                l[i][k] = (cov[i][k] - s) / l[k][k];
            }
        }
    }
    let mut y = vec![0.0; d];
    for i in 0..d {
        let s: f64 = (0..i).map(|m| l[i][m] * y[m]).sum();
        y[i] = (x[i] - s) / l[i][i];
    }
    let det_sqrt: f64 = (0..d).map(|i| l[i][i]).product();
    let quad: f64 = y.iter().map(|v| v * v).sum();
    (-0.5 * quad).exp() / ((2.0 * PI).powf(d as f64 / 2.0) * det_sqrt)
}

impl HarmonicEnsemble {
    pub fn new(n_particles: usize, temperature: f64, regime: Regime) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid("temperature", "must be positive"));
        }
        if n_particles == 0 {
            return Err(Error::invalid("n_particles", "must be positive"));
        }
        Ok(HarmonicEnsemble {
            basis: ModeBasis::new(n_particles),
            temperature,
            regime,
        })
    }

    pub fn basis(&self) -> &ModeBasis {
        &self.basis
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    fn n(&self) -> usize {
        self.basis.n_particles()
    }

    fn variance_at(&self, omega: f64) -> f64 {
        let t = self.temperature;
        match self.regime {
            Regime::Classical => t / (omega * omega),
            Regime::Quantum => 1.0 / (2.0 * omega * (omega / (2.0 * t)).tanh()),
        }
    }

    /// `T/ω_j²` classically, `1/(2 ω_j tanh(ω_j/2T))` quantum mechanically.
    pub fn mode_variance(&self, j: usize) -> Result<f64> {
        check_index(j, self.n())?;
        Ok(self.variance_at(self.basis.frequency(j)))
    }

    /// Joint density of the mode coordinates `eta[i]` of modes `modes[i]`.
    pub fn mode_density(&self, eta: &[f64], modes: &[usize]) -> Result<f64> {
        if eta.len() != modes.len() {
            return Err(Error::LengthMismatch {
                expected: modes.len(),
                found: eta.len(),
            });
        }
        let mut density = 1.0;
        for (&x, &j) in eta.iter().zip(modes) {
            let var = self.mode_variance(j)?;
            density *= (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
        }
        Ok(density)
    }

    /// Equal-time covariance `⟨q_j q_k⟩`.
    pub fn position_covariance(&self, j: usize, k: usize) -> Result<f64> {
        check_index(j, self.n())?;
        check_index(k, self.n())?;
        Ok((1..=self.n())
            .map(|l| {
                self.basis.kernel(j, l)
                    * self.basis.kernel(k, l)
                    * self.variance_at(self.basis.frequency(l))
            })
            .sum())
    }

    /// `σ_{q_j}² = Σ_l sin²(π j l/(N+1)) / ((N+1) ω_l tanh(ω_l/2T))` in the
    /// quantum regime.
    pub fn position_variance(&self, j: usize) -> Result<f64> {
        self.position_covariance(j, j)
    }

    /// Joint Gaussian density of the displacements `q[i]` of particles
    /// `particles[i]`.
    pub fn position_density(&self, q: &[f64], particles: &[usize]) -> Result<f64> {
        if q.len() != particles.len() {
            return Err(Error::LengthMismatch {
                expected: particles.len(),
                found: q.len(),
            });
        }
        let cov = particles
            .iter()
            .map(|&a| {
                particles
                    .iter()
                    .map(|&b| self.position_covariance(a, b))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(gaussian_density(q, &cov))
    }

    /// Kubo-transformed mode correlation `δ_{jk} T cos(ω_j t)/ω_j²`.
    pub fn kubo_mode(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        check_index(j, self.n())?;
        check_index(k, self.n())?;
        if j != k {
            return Ok(0.0);
        }
        let w = self.basis.frequency(j);
        Ok(self.temperature * (w * t).cos() / (w * w))
    }

    /// Kubo-transformed position correlation
    /// `Σ_l S_{jl} S_{kl} T cos(ω_l t)/ω_l²`.
    pub fn kubo_position(&self, j: usize, k: usize, t: f64) -> Result<f64> {
        check_index(j, self.n())?;
        check_index(k, self.n())?;
        Ok((1..=self.n())
            .map(|l| {
                let w = self.basis.frequency(l);
                self.basis.kernel(j, l) * self.basis.kernel(k, l) * self.temperature * (w * t).cos()
                    / (w * w)
            })
            .sum())
    }

    /// Short-time coefficients `ζ_{2n} = T Σ_l S_{jl}² ω_l^{2n−2}`,
    /// `n = 0..=3`, of the position correlation.
    pub fn zeta(&self, j: usize) -> Result<[f64; 4]> {
        check_index(j, self.n())?;
        let mut z = [0.0; 4];
        for l in 1..=self.n() {
            let w2 = self.basis.frequency(l).powi(2);
            let s2 = self.basis.kernel(j, l).powi(2);
            let mut wpow = 1.0 / w2;
            for zn in z.iter_mut() {
                *zn += self.temperature * s2 * wpow;
                wpow *= w2;
            }
        }
        Ok(z)
    }
}

/// Ring-polymer mode correlation; identical to the exact Kubo form.
pub fn rpmd_harmonic_mode(ensemble: &HarmonicEnsemble, j: usize, t: f64) -> Result<f64> {
    ensemble.kubo_mode(j, j, t)
}

/// Ring-polymer position correlation; identical to the exact Kubo form.
pub fn rpmd_harmonic_position(ensemble: &HarmonicEnsemble, j: usize, t: f64) -> Result<f64> {
    ensemble.kubo_position(j, j, t)
}

/// Zero-temperature mode density `∏ √(ω_j/π) e^{−ω_j η_j²}`.
pub fn ground_state_density(basis: &ModeBasis, eta: &[f64], modes: &[usize]) -> Result<f64> {
    if eta.len() != modes.len() {
        return Err(Error::LengthMismatch {
            expected: modes.len(),
            found: eta.len(),
        });
    }
    let mut density = 1.0;
    for (&x, &j) in eta.iter().zip(modes) {
        check_index(j, basis.n_particles())?;
        let w = basis.frequency(j);
        density *= (w / PI).sqrt() * (-w * x * x).exp();
    }
    Ok(density)
}

/// Thermal density of one oscillator mode summed level by level,
/// `(1 − e^{−ω/T}) Σ_{n ≤ n_max} |ψ_n(η)|² e^{−nω/T}`.
#[derive(Debug, Clone, Copy)]
pub struct LevelSum {
    pub value: f64,
    /// Upper bound on the omitted levels.
    pub tail_bound: f64,
}

pub fn level_sum_density(omega: f64, temperature: f64, eta: f64, n_max: usize) -> LevelSum {
    let x = omega.sqrt() * eta;
    let boltz = (-omega / temperature).exp();
    let mut prev = 0.0;
    let mut psi = (omega / PI).powf(0.25) * (-0.5 * x * x).exp();
    let mut weight = 1.0;
    let mut sum = psi * psi;
    for n in 0..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * psi - (nf / (nf + 1.0)).sqrt() * prev;
        prev = psi;
        psi = next;
        weight *= boltz;
        sum += psi * psi * weight;
    }
    // |H_n(x)| e^{−x²/2} ≤ k 2^{n/2} √(n!) with k < 1.0865
    let k = 1.086_435;
    LevelSum {
        value: (1.0 - boltz) * sum,
        tail_bound: k * k * (omega / PI).sqrt() * weight * boltz,
    }
}

/// Ring-polymer normal frequency
/// `Ω_{j,k} = P T [4 sin²(π(k−1)/P) + ω_j²/(P² T²)]^{1/2}`, `k = 1..=P`.
pub fn rp_normal_frequency(
    basis: &ModeBasis,
    j: usize,
    k: usize,
    temperature: f64,
    beads: usize,
) -> Result<f64> {
    check_index(j, basis.n_particles())?;
    check_index(k, beads)?;
    let pt = beads as f64 * temperature;
    let w = basis.frequency(j);
    let s = (PI * (k - 1) as f64 / beads as f64).sin();
    Ok((4.0 * pt * pt * s * s + w * w).sqrt())
}

/// Crossover between the two closed forms of the quartic-site moment.
const QUARTIC_SWITCH: f64 = 2.0;

fn quartic_argument(temperature: f64, alpha: f64) -> Result<f64> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("temperature", "must be positive"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", "must be positive"));
    }
    Ok(1.0 / (4.0 * alpha * temperature))
}

/// `∫ e^{−(q² + α q⁴/2)/T} dq = e^z K_{1/4}(z)/√(2α)` with `z = 1/(4αT)`.
pub fn quartic_site_partition(temperature: f64, alpha: f64) -> Result<f64> {
    let z = quartic_argument(temperature, alpha)?;
    Ok(bessel_k_scaled(0.25, z) / (2.0 * alpha).sqrt())
}

/// `⟨q²⟩` in the single-site potential `q² + α q⁴/2`.
///
/// For `z = 1/(4αT) ≤ 2` the combination of `I_{±1/4}, I_{3/4}, I_{5/4}` is
/// used directly. For larger `z` it cancels catastrophically, and the
/// equivalent `(K_{3/4} − K_{1/4})/(2α K_{1/4})` is used instead.
pub fn quartic_site_moment(temperature: f64, alpha: f64) -> Result<f64> {
    let z = quartic_argument(temperature, alpha)?;
    if z <= QUARTIC_SWITCH {
        let bracket = -bessel_i(-0.25, z) + (1.0 + 2.0 * alpha * temperature) * bessel_i(0.25, z)
            - bessel_i(0.75, z)
            + bessel_i(1.25, z);
        let k = bessel_k_scaled(0.25, z) * (-z).exp();
        Ok(PI / (2.0 * 2f64.sqrt() * alpha * k) * bracket)
    } else {
        let k1 = bessel_k_scaled(0.25, z);
        let k3 = bessel_k_scaled(0.75, z);
        Ok((k3 - k1) / (2.0 * alpha * k1))
    }
}
