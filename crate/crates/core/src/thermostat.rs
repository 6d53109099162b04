//! Massive Nosé-Hoover chains.
//!
//! Every bead degree of freedom carries its own chain of `M` thermostats.
//! The chain flow for half a time step is factorized with a seventh-stage
//! symmetric composition of second-order splittings, each applied `n_R`
//! times (multiple time stepping). Degrees of freedom never interact inside
//! the thermostat flow, so the update order across them is irrelevant.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring_polymer::StagingMasses;

/// Sixth-order palindromic composition weights (Yoshida's solution A).
const YOSHIDA_6: [f64; 3] = [0.784513610477560, 0.235573213359357, -1.17767998417887];

/// Residual of the order conditions `Σw − 1`, `Σw³`, `Σw⁵`, as the largest
/// absolute value of the three, or infinity for non-palindromic weights.
pub fn composition_residual(weights: &[f64]) -> f64 {
    let n = weights.len();
    if (0..n).any(|i| weights[i] != weights[n - 1 - i]) {
        return f64::INFINITY;
    }
    let s1: f64 = weights.iter().sum::<f64>() - 1.0;
    let s3: f64 = weights.iter().map(|w| w.powi(3)).sum();
    let s5: f64 = weights.iter().map(|w| w.powi(5)).sum();
    s1.abs().max(s3.abs()).max(s5.abs())
}

/// Weights of the symmetric composition of the given order. Only order six
/// (seven stages) is available; the weights are checked against the order
/// conditions before being returned.
pub fn sy_weights(order: u32) -> Result<[f64; 7]> {
    if order != 6 {
        return Err(Error::UnsupportedOrder(order));
    }
    let [w1, w2, w3] = YOSHIDA_6;
    let w0 = 1.0 - 2.0 * (w1 + w2 + w3);
    let w = [w1, w2, w3, w0, w3, w2, w1];
    let residual = composition_residual(&w);
    if !(residual < 1e-12) {
        return Err(Error::WeightVerification(residual));
    }
    Ok(w)
}

/// `1/√2`, the inverse of the centre frequency `ω = √2` of the harmonic
/// band. Much longer scales (one period of the slowest mode, say) leave the
/// modes of a nearly harmonic chain exchanging energy only over hundreds of
/// time units.
pub const DEFAULT_TAU: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NhcParams {
    /// Thermostats per chain, `M ≥ 2`.
    pub chain_length: usize,
    /// Time scale of the centroid thermostats. `None` selects
    /// [`DEFAULT_TAU`].
    pub tau: Option<f64>,
    /// Inner repetitions `n_R` of each composition stage.
    pub respa_steps: usize,
}

impl Default for NhcParams {
    fn default() -> Self {
        NhcParams {
            chain_length: 5,
            tau: None,
            respa_steps: 5,
        }
    }
}

impl NhcParams {
    pub fn validate(&self) -> Result<()> {
        if self.chain_length < 2 {
            return Err(Error::invalid(
                "chain_length",
                "a thermostat chain needs at least two links",
            ));
        }
        if self.respa_steps == 0 {
            return Err(Error::invalid("respa_steps", "must be at least 1"));
        }
        if let Some(tau) = self.tau {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::invalid("tau", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn resolved_tau(&self) -> f64 {
        self.tau.unwrap_or(DEFAULT_TAU)
    }
}

/// Thermostat masses by bead: `τ² T` for the first bead, `1/(P T)` for the
/// others. All links of a chain share the mass of their bead.
pub fn nhc_masses(temperature: f64, beads: usize, tau: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("temperature", "must be positive"));
    }
    if beads == 0 {
        return Err(Error::invalid("beads", "must be at least 1"));
    }
    Ok((0..beads)
        .map(|b| {
            if b == 0 {
                tau * tau * temperature
            } else {
                1.0 / (beads as f64 * temperature)
            }
        })
        .collect())
}

/// Thermostat positions and momenta, `M` entries per degree of freedom,
/// stored in the same row-major order as the bead arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermostatBank {
    chain_length: usize,
    pub eta: Vec<f64>,
    pub p_eta: Vec<f64>,
}

impl ThermostatBank {
    pub fn zeros(dofs: usize, chain_length: usize) -> Self {
        ThermostatBank {
            chain_length,
            eta: vec![0.0; dofs * chain_length],
            p_eta: vec![0.0; dofs * chain_length],
        }
    }

    pub fn chain_length(&self) -> usize {
        self.chain_length
    }

    pub fn dofs(&self) -> usize {
        self.eta.len() / self.chain_length
    }
}

/// Chain propagator for a `P × N` bead system at fixed temperature.
#[derive(Debug, Clone)]
pub struct NoseHooverChains {
    n_particles: usize,
    chain_length: usize,
    respa_steps: usize,
    temperature: f64,
    weights: [f64; 7],
    /// Thermostat mass per bead.
    q_mass: Vec<f64>,
    /// Kinetic mass `μ'_k` per bead.
    kinetic_mass: Vec<f64>,
}

impl NoseHooverChains {
    pub fn new(
        params: &NhcParams,
        temperature: f64,
        beads: usize,
        n_particles: usize,
    ) -> Result<Self> {
        params.validate()?;
        let q_mass = nhc_masses(temperature, beads, params.resolved_tau())?;
        Ok(NoseHooverChains {
            n_particles,
            chain_length: params.chain_length,
            respa_steps: params.respa_steps,
            temperature,
            weights: sy_weights(6)?,
            q_mass,
            kinetic_mass: StagingMasses::new(beads).kinetic,
        })
    }

    /// Chains acting on momenta with explicit per-bead masses.
    pub fn with_masses(
        params: &NhcParams,
        temperature: f64,
        n_particles: usize,
        kinetic_mass: Vec<f64>,
        q_mass: Vec<f64>,
    ) -> Result<Self> {
        params.validate()?;
        if kinetic_mass.len() != q_mass.len() {
            return Err(Error::LengthMismatch {
                expected: kinetic_mass.len(),
                found: q_mass.len(),
            });
        }
        if q_mass.iter().any(|&q| !(q > 0.0)) {
            return Err(Error::invalid("thermostat mass", "must be positive"));
        }
        Ok(NoseHooverChains {
            n_particles,
            chain_length: params.chain_length,
            respa_steps: params.respa_steps,
            temperature,
            weights: sy_weights(6)?,
            q_mass,
            kinetic_mass,
        })
    }

    pub fn dofs(&self) -> usize {
        self.n_particles * self.q_mass.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.q_mass
    }

    pub fn respa_steps(&self) -> usize {
        self.respa_steps
    }

    pub fn set_respa_steps(&mut self, n: usize) {
        self.respa_steps = n.max(1);
    }

    /// Thermostat momenta Maxwell-distributed with their masses, `η = 0`.
    pub fn init_bank<R: Rng + ?Sized>(&self, rng: &mut R) -> ThermostatBank {
        let m = self.chain_length;
        let mut bank = ThermostatBank::zeros(self.dofs(), m);
        for (i, chain) in bank.p_eta.chunks_exact_mut(m).enumerate() {
            let q = self.q_mass[i / self.n_particles];
            let normal = Normal::new(0.0, (q * self.temperature).sqrt()).expect("positive width");
            for p in chain {
                *p = normal.sample(rng);
            }
        }
        bank
    }

    /// `Σ [p_η²/(2Q) + T η]` over all chains.
    pub fn energy(&self, bank: &ThermostatBank) -> f64 {
        let m = self.chain_length;
        bank.eta
            .chunks_exact(m)
            .zip(bank.p_eta.chunks_exact(m))
            .enumerate()
            .map(|(i, (eta, p))| {
                let q = self.q_mass[i / self.n_particles];
                eta.iter()
                    .zip(p)
                    .map(|(e, p)| p * p / (2.0 * q) + self.temperature * e)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Propagate the chain flow by `dt/2` for every degree of freedom.
    /// `momenta` is the flat row-major bead momentum array.
    pub fn half_step(&self, momenta: &mut [f64], bank: &mut ThermostatBank, dt: f64) {
        debug_assert_eq!(momenta.len(), self.dofs());
        self.propagate_range(0, momenta, &mut bank.eta, &mut bank.p_eta, dt);
    }

    /// Same as [`half_step`](Self::half_step) with the degrees of freedom
    /// split into `parts` contiguous blocks updated on the rayon pool.
    pub fn half_step_partitioned(
        &self,
        momenta: &mut [f64],
        bank: &mut ThermostatBank,
        dt: f64,
        parts: usize,
    ) {
        let m = self.chain_length;
        let block = momenta.len().div_ceil(parts.max(1)).max(1);
        momenta
            .par_chunks_mut(block)
            .zip(bank.eta.par_chunks_mut(block * m))
            .zip(bank.p_eta.par_chunks_mut(block * m))
            .enumerate()
            .for_each(|(c, ((ps, etas), p_etas))| {
                self.propagate_range(c * block, ps, etas, p_etas, dt);
            });
    }

    /// Half-step chain flow of the single degree of freedom `i`.
    pub fn propagate_dof(
        &self,
        i: usize,
        p: &mut f64,
        eta: &mut [f64],
        p_eta: &mut [f64],
        dt: f64,
    ) {
        self.propagate_block(i, std::slice::from_mut(p), eta, p_eta, dt);
    }

    fn propagate_range(
        &self,
        first: usize,
        momenta: &mut [f64],
        eta: &mut [f64],
        p_eta: &mut [f64],
        dt: f64,
    ) {
        let m = self.chain_length;
        for (b, ((ps, etas), p_etas)) in momenta
            .chunks_mut(LANES)
            .zip(eta.chunks_mut(LANES * m))
            .zip(p_eta.chunks_mut(LANES * m))
            .enumerate()
        {
            self.propagate_block(first + b * LANES, ps, etas, p_etas, dt);
        }
    }

    /// Up to [`LANES`] consecutive degrees of freedom starting at `first`,
    /// advanced side by side so that their independent chains overlap in
    /// the pipeline. Every lane performs the same operations as a lone one.
    fn propagate_block(
        &self,
        first: usize,
        momenta: &mut [f64],
        eta: &mut [f64],
        p_eta: &mut [f64],
        dt: f64,
    ) {
        let m = self.chain_length;
        let n = momenta.len();
        let mut lanes = Lanes {
            p: [0.0; LANES],
            mass: [1.0; LANES],
            inv_q: [1.0; LANES],
            eta: vec![[0.0; LANES]; m],
            p_eta: vec![[0.0; LANES]; m],
        };
        for l in 0..n {
            let bead = (first + l) / self.n_particles;
            lanes.p[l] = momenta[l];
            lanes.mass[l] = self.kinetic_mass[bead];
            lanes.inv_q[l] = 1.0 / self.q_mass[bead];
            for g in 0..m {
                lanes.eta[g][l] = eta[l * m + g];
                lanes.p_eta[g][l] = p_eta[l * m + g];
            }
        }
        let n_r = self.respa_steps;
        for w in self.weights {
            let delta = w * dt / n_r as f64;
            for _ in 0..n_r {
                self.chain_substep(&mut lanes, delta);
            }
        }
        for l in 0..n {
            momenta[l] = lanes.p[l];
            for g in 0..m {
                eta[l * m + g] = lanes.eta[g][l];
                p_eta[l * m + g] = lanes.p_eta[g][l];
            }
        }
    }

    /// One factor `S(δ/2)` on every lane.
    #[inline]
    fn chain_substep(&self, x: &mut Lanes, delta: f64) {
        let t = self.temperature;
        let m = x.eta.len();
        let quarter = delta / 4.0;
        let eighth = delta / 8.0;
        let half = delta / 2.0;

        let kick = |x: &mut Lanes, g: usize| {
            for l in 0..LANES {
                let force = if g == 0 {
                    x.p[l] * x.p[l] / x.mass[l] - t
                } else {
                    x.p_eta[g - 1][l] * x.p_eta[g - 1][l] * x.inv_q[l] - t
                };
                x.p_eta[g][l] += quarter * force;
            }
        };
        let scaled_kick = |x: &mut Lanes, g: usize| {
            for l in 0..LANES {
                let s = (-eighth * x.p_eta[g + 1][l] * x.inv_q[l]).exp();
                let force = if g == 0 {
                    x.p[l] * x.p[l] / x.mass[l] - t
                } else {
                    x.p_eta[g - 1][l] * x.p_eta[g - 1][l] * x.inv_q[l] - t
                };
                x.p_eta[g][l] = (x.p_eta[g][l] * s + quarter * force) * s;
            }
        };

        kick(x, m - 1);
        for g in (0..m - 1).rev() {
            scaled_kick(x, g);
        }
        for l in 0..LANES {
            x.p[l] *= (-half * x.p_eta[0][l] * x.inv_q[l]).exp();
        }
        for g in 0..m {
            for l in 0..LANES {
                x.eta[g][l] += half * x.p_eta[g][l] * x.inv_q[l];
            }
        }
        for g in 0..m - 1 {
            scaled_kick(x, g);
        }
        kick(x, m - 1);
    }
}

/// Degrees of freedom propagated together by the chain flow.
const LANES: usize = 8;

/// Structure-of-arrays working copy of a block of chains.
struct Lanes {
    p: [f64; LANES],
    mass: [f64; LANES],
    inv_q: [f64; LANES],
    eta: Vec<[f64; LANES]>,
    p_eta: Vec<[f64; LANES]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weights_satisfy_order_conditions() {
        let w = sy_weights(6).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().map(|x| x.powi(3)).sum::<f64>().abs() < 1e-12);
        assert!(w.iter().map(|x| x.powi(5)).sum::<f64>().abs() < 1e-12);
        for a in 0..7 {
            assert_eq!(w[a], w[6 - a]);
        }
        assert!(matches!(sy_weights(4), Err(Error::UnsupportedOrder(4))));
        assert_eq!(composition_residual(&[0.5, 0.25, 0.25]), f64::INFINITY);
    }

    /// Velocity Verlet for `x'' = −x`.
    fn verlet(x: &mut f64, v: &mut f64, h: f64) {
        *v -= 0.5 * h * *x;
        *x += h * *v;
        *v -= 0.5 * h * *x;
    }

    fn composed_error(steps: usize) -> f64 {
        let w = sy_weights(6).unwrap();
        let h = 1.0 / steps as f64;
        let (mut x, mut v) = (1.0f64, 0.0f64);
        for _ in 0..steps {
            for &wa in &w {
                verlet(&mut x, &mut v, wa * h);
            }
        }
        ((x - 1f64.cos()).powi(2) + (v + 1f64.sin()).powi(2)).sqrt()
    }

    #[test]
    fn composition_is_sixth_order() {
        let e1 = composed_error(4);
        let e2 = composed_error(8);
        let e3 = composed_error(16);
        let o1 = (e1 / e2).log2();
        let o2 = (e2 / e3).log2();
        assert!(o1 >= 5.8 && o2 >= 5.8, "observed orders {o1} {o2}");
    }

    #[test]
    fn masses_by_bead() {
        let q = nhc_masses(0.01, 4, 1.0).unwrap();
        assert!((q[0] - 0.01).abs() < 1e-15);
        let q = nhc_masses(1.0, 64, 3.0).unwrap();
        assert!((q[0] - 9.0).abs() < 1e-15);
        assert!(q[1..].iter().all(|&x| (x - 1.0 / 64.0).abs() < 1e-15));
        let q = nhc_masses(0.5, 1, 2.0).unwrap();
        assert_eq!(q, vec![2.0]);
        assert!(nhc_masses(0.0, 4, 1.0).is_err());
        assert!(nhc_masses(-1.0, 4, 1.0).is_err());
    }

    #[test]
    fn single_link_chain_is_rejected() {
        let params = NhcParams {
            chain_length: 1,
            ..NhcParams::default()
        };
        assert!(NoseHooverChains::new(&params, 1.0, 4, 8).is_err());
    }

    /// With `p²/μ' = T` and resting thermostats the first link feels no
    /// force, so the physical momenta are untouched. The upper links still
    /// relax because their forces are `p_η²/Q − T = −T`.
    #[test]
    fn thermal_fixed_point() {
        let t = 0.3;
        let chains = NoseHooverChains::new(&NhcParams::default(), t, 4, 3).unwrap();
        let masses = StagingMasses::new(4).kinetic;
        let mut momenta: Vec<f64> = (0..12)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (masses[i / 3] * t).sqrt()
            })
            .collect();
        let before = momenta.clone();
        let mut bank = ThermostatBank::zeros(12, 5);
        chains.half_step(&mut momenta, &mut bank, 0.1);
        for (a, b) in momenta.iter().zip(&before) {
            assert!((a - b).abs() < 1e-15);
        }
        for chain in 0..12 {
            assert!(bank.eta[chain * 5].abs() < 1e-15);
            assert!(bank.p_eta[chain * 5].abs() < 1e-15);
            assert!(bank.p_eta[chain * 5 + 4] < 0.0);
        }
    }

    #[test]
    fn scaling_preserves_sign() {
        let chains = NoseHooverChains::new(&NhcParams::default(), 1.0, 2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut bank = chains.init_bank(&mut rng);
        for p in bank.p_eta.iter_mut() {
            *p *= 5.0;
        }
        let mut momenta = vec![3.0, -2.0, 0.5, -0.25];
        let signs: Vec<f64> = momenta.iter().map(|p: &f64| p.signum()).collect();
        chains.half_step(&mut momenta, &mut bank, 0.5);
        for (p, s) in momenta.iter().zip(signs) {
            assert_eq!(p.signum(), s);
        }
    }

    /// Right-hand side of the chain equations for one degree of freedom
    /// with unit physical mass and no external force.
    fn chain_rhs(y: &[f64], q: f64, t: f64) -> Vec<f64> {
        // y = [p, eta_1..eta_m, p_eta_1..p_eta_m]
        let m = (y.len() - 1) / 2;
        let p = y[0];
        let pe = &y[1 + m..];
        let mut d = vec![0.0; y.len()];
        d[0] = -pe[0] / q * p;
        for g in 0..m {
            d[1 + g] = pe[g] / q;
            let force = if g == 0 {
                p * p - t
            } else {
                pe[g - 1] * pe[g - 1] / q - t
            };
            let friction = if g + 1 < m {
                pe[g] * pe[g + 1] / q
            } else {
                0.0
            };
            d[1 + m + g] = force - friction;
        }
        d
    }

    fn rk4(mut y: Vec<f64>, q: f64, t: f64, time: f64, steps: usize) -> Vec<f64> {
        let h = time / steps as f64;
        for _ in 0..steps {
            let k1 = chain_rhs(&y, q, t);
            let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
            let k2 = chain_rhs(&y2, q, t);
            let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
            let k3 = chain_rhs(&y3, q, t);
            let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
            let k4 = chain_rhs(&y4, q, t);
            for i in 0..y.len() {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        y
    }

    #[test]
    fn half_step_matches_ode_solution() {
        let (t, q) = (0.8, 1.7);
        let params = NhcParams {
            chain_length: 2,
            tau: None,
            respa_steps: 1,
        };
        let chains = NoseHooverChains::with_masses(&params, t, 1, vec![1.0], vec![q]).unwrap();
        for dt in [0.2, 0.1] {
            let y0 = vec![1.3, 0.0, 0.0, 0.6, -0.4];
            let exact = rk4(y0.clone(), q, t, dt / 2.0, 2000);
            let mut p = [y0[0]];
            let mut bank = ThermostatBank {
                chain_length: 2,
                eta: vec![0.0, 0.0],
                p_eta: vec![0.6, -0.4],
            };
            chains.half_step(&mut p, &mut bank, dt);
            let got = [p[0], bank.eta[0], bank.eta[1], bank.p_eta[0], bank.p_eta[1]];
            let err = got
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-2 * dt * dt * dt, "dt={dt} err={err:e}");
        }
    }

    #[test]
    fn update_order_is_irrelevant() {
        let chains = NoseHooverChains::new(&NhcParams::default(), 0.6, 4, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bank0 = chains.init_bank(&mut rng);
        let mom0: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();

        let mut a_mom = mom0.clone();
        let mut a_bank = bank0.clone();
        chains.half_step(&mut a_mom, &mut a_bank, 0.05);

        let mut b_mom = mom0.clone();
        let mut b_bank = bank0.clone();
        let m = 5;
        for i in (0..20).rev() {
            let (eta, p_eta) = (
                &mut b_bank.eta[i * m..(i + 1) * m],
                &mut b_bank.p_eta[i * m..(i + 1) * m],
            );
            chains.propagate_dof(i, &mut b_mom[i], eta, p_eta, 0.05);
        }
        assert_eq!(a_mom, b_mom);
        assert_eq!(a_bank, b_bank);

        for parts in [1, 3, 7, 20, 64] {
            let mut c_mom = mom0.clone();
            let mut c_bank = bank0.clone();
            chains.half_step_partitioned(&mut c_mom, &mut c_bank, 0.05, parts);
            assert_eq!(a_mom, c_mom);
            assert_eq!(a_bank, c_bank);
        }
    }

    #[test]
    fn maxwell_initialization() {
        let chains = NoseHooverChains::new(&NhcParams::default(), 2.0, 16, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bank = chains.init_bank(&mut rng);
        // ⟨p²/Q⟩ = T per link
        let m = 5;
        let mean: f64 = bank
            .p_eta
            .iter()
            .enumerate()
            .map(|(i, p)| p * p / chains.masses()[i / m / 8])
            .sum::<f64>()
            / bank.p_eta.len() as f64;
        assert!((mean - 2.0).abs() < 0.25, "{mean}");
        assert_eq!(chains.energy(&ThermostatBank::zeros(128, 5)), 0.0);
    }
}
