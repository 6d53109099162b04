//! The FPU chain: nearest-neighbour pair potential with fixed ends.
//!
//! A configuration is a slice `q` of `N` displacements. The wall particles
//! `q_0 = q_{N+1} = 0` are never stored; every routine that needs them
//! substitutes zero on the fly.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Lattice size and anharmonic coefficients of
/// `V(r) = r²/2 + α r³/3 + β r⁴/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainSpec {
    n_particles: usize,
    alpha: f64,
    beta: f64,
}

impl ChainSpec {
    /// Chain with `β = α`.
    pub fn new(n_particles: usize, alpha: f64) -> Result<Self> {
        Self::with_coefficients(n_particles, alpha, alpha, false)
    }

    /// Harmonic chain, `α = β = 0`.
    pub fn harmonic(n_particles: usize) -> Result<Self> {
        Self::new(n_particles, 0.0)
    }

    /// General coefficients. Unless `allow_unequal` is set, `alpha` and `beta`
    /// must coincide.
    pub fn with_coefficients(
        n_particles: usize,
        alpha: f64,
        beta: f64,
        allow_unequal: bool,
    ) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::invalid("n_particles", "must be positive"));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::invalid("alpha", "must be finite and >= 0"));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::invalid("beta", "must be finite and >= 0"));
        }
        if !allow_unequal && alpha != beta {
            return Err(Error::invalid(
                "beta",
                format!("must equal alpha ({alpha}) unless unequal coefficients are allowed"),
            ));
        }
        if alpha > 0.0 && beta <= 0.0 {
            return Err(Error::invalid(
                "beta",
                "must be positive when alpha is positive (unbounded potential)",
            ));
        }
        Ok(ChainSpec {
            n_particles,
            alpha,
            beta,
        })
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_harmonic(&self) -> bool {
        self.alpha == 0.0 && self.beta == 0.0
    }

    #[inline]
    pub fn pair_potential(&self, r: f64) -> f64 {
        let r2 = r * r;
        r2 / 2.0 + self.alpha * r2 * r / 3.0 + self.beta * r2 * r2 / 4.0
    }

    /// `V'(r)`.
    #[inline]
    pub fn pair_force(&self, r: f64) -> f64 {
        r * (1.0 + r * (self.alpha + self.beta * r))
    }

    /// `V''(r)`.
    #[inline]
    pub fn pair_stiffness(&self, r: f64) -> f64 {
        1.0 + r * (2.0 * self.alpha + 3.0 * self.beta * r)
    }

    /// Position of the second (absolute) minimum of `V`, which exists for
    /// `α ≥ 4` when `β = α`.
    pub fn minimum_displacement(&self) -> Result<f64> {
        let (a, b) = (self.alpha, self.beta);
        // V'(r)/r = 1 + a r + b r^2
        let disc = a * a - 4.0 * b;
        if b <= 0.0 || disc < 0.0 {
            return Err(Error::NoSecondaryMinimum { alpha: a });
        }
        Ok((-a - disc.sqrt()) / (2.0 * b))
    }

    /// `Σ_{j=0..N} V(q_{j+1} − q_j)` with zero walls.
    pub fn chain_potential(&self, q: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), self.n_particles);
        let mut left = 0.0;
        let mut energy = 0.0;
        for &x in q {
            energy += self.pair_potential(x - left);
            left = x;
        }
        energy + self.pair_potential(-left)
    }

    /// Forces `−∂V/∂q_j` written into `out`.
    pub fn chain_forces_into(&self, q: &[f64], out: &mut [f64]) {
        debug_assert_eq!(q.len(), self.n_particles);
        debug_assert_eq!(out.len(), self.n_particles);
        let n = q.len();
        // bond b joins particle b-1 and b (b = 0..=n), tension V'(q_b - q_{b-1})
        let mut tension_left = self.pair_force(q[0]);
        for j in 0..n {
            let right = if j + 1 < n { q[j + 1] } else { 0.0 };
            let tension_right = self.pair_force(right - q[j]);
            out[j] = tension_right - tension_left;
            tension_left = tension_right;
        }
    }

    pub fn chain_forces(&self, q: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; q.len()];
        self.chain_forces_into(q, &mut out);
        out
    }

    /// Bond stretches `q_{b} − q_{b−1}` for `b = 1..=N+1`, walls included.
    pub fn bond_stretches(&self, q: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(q.len() + 1);
        let mut left = 0.0;
        for &x in q {
            out.push(x - left);
            left = x;
        }
        out.push(-left);
        out
    }
}

/// Normal modes of the harmonic chain with fixed ends.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    n: usize,
    frequencies: Vec<f64>,
    kernel: Vec<f64>,
}

impl ModeBasis {
    pub fn new(n_particles: usize) -> Self {
        let n = n_particles;
        let np1 = (n + 1) as f64;
        let frequencies = (1..=n)
            .map(|j| 2.0 * (PI * j as f64 / (2.0 * np1)).sin())
            .collect();
        let norm = (2.0 / np1).sqrt();
        let mut kernel = vec![0.0; n * n];
        for j in 1..=n {
            for l in 1..=n {
                kernel[(j - 1) * n + (l - 1)] = norm * (PI * (j * l) as f64 / np1).sin();
            }
        }
        ModeBasis {
            n,
            frequencies,
            kernel,
        }
    }

    pub fn n_particles(&self) -> usize {
        self.n
    }

    /// `ω_j`, indexed from zero.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// `ω_j` for the 1-based mode index `j`.
    pub fn frequency(&self, j: usize) -> f64 {
        self.frequencies[j - 1]
    }

    /// Kernel entry `√(2/(N+1)) sin(π j l/(N+1))`, 1-based.
    pub fn kernel(&self, j: usize, l: usize) -> f64 {
        self.kernel[(j - 1) * self.n + (l - 1)]
    }

    pub fn to_modes(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self
            .kernel
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(k, v)| k * v).sum())
            .collect())
    }

    /// The kernel is symmetric and involutive, so this is the same map.
    pub fn from_modes(&self, eta: &[f64]) -> Result<Vec<f64>> {
        self.to_modes(eta)
    }

    /// Single mode coordinate `η_j` (1-based).
    pub fn mode(&self, j: usize, x: &[f64]) -> f64 {
        self.kernel[(j - 1) * self.n..j * self.n]
            .iter()
            .zip(x)
            .map(|(k, v)| k * v)
            .sum()
    }
}
