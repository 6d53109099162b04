//! Ring-polymer images of the chain.
//!
//! Bead arrays are `P × N` matrices in row-major order: row `k` holds the
//! configuration of bead `k`, so the flat index is `N·k + j` with the
//! particle index running fastest. Beads are cyclic (`q^{P+1} = q^1`).
//!
//! Two Hamiltonians are used. The sampling one ([`pimd_hamiltonian`]) has
//! spring constant `P T²`, potential `V/P` and is weighted by `e^{−H/T}`;
//! the dynamical one ([`rpmd_hamiltonian`]) has spring constant `P² T²`,
//! full potential `V` and is weighted by `e^{−H/(PT)}`. Both define the same
//! distribution over bead positions.

use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis};

use crate::error::{Error, Result};
use crate::model::ChainSpec;

/// Which coordinates a [`RingPolymerState`] currently stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Primitive,
    Staged,
}

/// Fictitious masses of the staging coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StagingMasses {
    /// Spring weights `μ_k`: `0` for the first bead, `k/(k−1)` otherwise.
    pub spring: Vec<f64>,
    /// Kinetic masses `μ'_k`: `1` for the first bead, `μ_k` otherwise.
    pub kinetic: Vec<f64>,
}

impl StagingMasses {
    pub fn new(beads: usize) -> Self {
        let spring: Vec<f64> = (1..=beads)
            .map(|k| {
                if k == 1 {
                    0.0
                } else {
                    k as f64 / (k - 1) as f64
                }
            })
            .collect();
        let kinetic = spring
            .iter()
            .enumerate()
            .map(|(i, &m)| if i == 0 { 1.0 } else { m })
            .collect();
        StagingMasses { spring, kinetic }
    }

    pub fn beads(&self) -> usize {
        self.spring.len()
    }
}

/// Bead positions and momenta.
///
/// Staging acts on positions only; the momenta are the ones the sampler
/// integrates and are left untouched by a change of representation.
#[derive(Debug, Clone, PartialEq)]
pub struct RingPolymerState {
    pub positions: Array2<f64>,
    pub momenta: Array2<f64>,
    representation: Representation,
}

impl RingPolymerState {
    pub fn zeros(beads: usize, n_particles: usize, representation: Representation) -> Self {
        RingPolymerState {
            positions: Array2::zeros((beads, n_particles)),
            momenta: Array2::zeros((beads, n_particles)),
            representation,
        }
    }

    pub fn from_parts(
        positions: Array2<f64>,
        momenta: Array2<f64>,
        representation: Representation,
    ) -> Result<Self> {
        if positions.dim() != momenta.dim() {
            return Err(Error::LengthMismatch {
                expected: positions.len(),
                found: momenta.len(),
            });
        }
        Ok(RingPolymerState {
            positions,
            momenta,
            representation,
        })
    }

    pub fn beads(&self) -> usize {
        self.positions.nrows()
    }

    pub fn n_particles(&self) -> usize {
        self.positions.ncols()
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn to_staged(&self) -> Self {
        match self.representation {
            Representation::Staged => self.clone(),
            Representation::Primitive => RingPolymerState {
                positions: stage(self.positions.view()),
                momenta: self.momenta.clone(),
                representation: Representation::Staged,
            },
        }
    }

    pub fn to_primitive(&self) -> Self {
        match self.representation {
            Representation::Primitive => self.clone(),
            Representation::Staged => RingPolymerState {
                positions: unstage(self.positions.view()),
                momenta: self.momenta.clone(),
                representation: Representation::Primitive,
            },
        }
    }

    /// Primitive bead positions regardless of the stored representation.
    pub fn primitive_positions(&self) -> Array2<f64> {
        match self.representation {
            Representation::Primitive => self.positions.clone(),
            Representation::Staged => unstage(self.positions.view()),
        }
    }
}

/// `u^1 = q^1`, `u^k = q^k − ((k−1) q^{k+1} + q^1)/k`.
pub fn stage(q: ArrayView2<f64>) -> Array2<f64> {
    let mut u = Array2::zeros(q.dim());
    stage_into(q, u.view_mut());
    u
}

pub fn stage_into(q: ArrayView2<f64>, mut u: ArrayViewMut2<f64>) {
    let p = q.nrows();
    let first = q.row(0);
    u.row_mut(0).assign(&first);
    for b in 1..p {
        let k = (b + 1) as f64;
        let next = q.row((b + 1) % p);
        let here = q.row(b);
        let mut out = u.row_mut(b);
        for j in 0..q.ncols() {
            out[j] = here[j] - ((k - 1.0) * next[j] + first[j]) / k;
        }
    }
}

/// Inverse of [`stage`], evaluated by the backward recursion
/// `q^k = u^k + ((k−1)/k) q^{k+1} + u^1/k` starting from `q^P = u^P + u^1`.
pub fn unstage(u: ArrayView2<f64>) -> Array2<f64> {
    let mut q = Array2::zeros(u.dim());
    unstage_into(u, q.view_mut());
    q
}

pub fn unstage_into(u: ArrayView2<f64>, mut q: ArrayViewMut2<f64>) {
    let p = u.nrows();
    let n = u.ncols();
    q.row_mut(0).assign(&u.row(0));
    if p == 1 {
        return;
    }
    for j in 0..n {
        let centroid = u[[0, j]];
        let mut next = u[[p - 1, j]] + centroid;
        q[[p - 1, j]] = next;
        for b in (1..p - 1).rev() {
            let k = (b + 1) as f64;
            next = u[[b, j]] + (k - 1.0) / k * next + centroid / k;
            q[[b, j]] = next;
        }
    }
}

/// `Σ_j Σ_k (q_j^{k+1} − q_j^k)²` over the closed ring.
pub fn primitive_spring_sum(q: ArrayView2<f64>) -> f64 {
    let p = q.nrows();
    if p == 1 {
        return 0.0;
    }
    let mut total = 0.0;
    for b in 0..p {
        let here = q.row(b);
        let next = q.row((b + 1) % p);
        total += here
            .iter()
            .zip(next.iter())
            .map(|(a, c)| (c - a) * (c - a))
            .sum::<f64>();
    }
    total
}

/// `Σ_j Σ_{k≥2} (k/(k−1)) (u_j^k)²`, equal to [`primitive_spring_sum`] of
/// the unstaged positions.
pub fn staged_spring_sum(u: ArrayView2<f64>) -> f64 {
    u.axis_iter(Axis(0))
        .enumerate()
        .skip(1)
        .map(|(b, row)| {
            let k = (b + 1) as f64;
            k / (k - 1.0) * row.iter().map(|x| x * x).sum::<f64>()
        })
        .sum()
}

/// Spring energy `(P T²/2) Σ (q^{k+1} − q^k)²` of the sampling Hamiltonian.
pub fn harmonic_spring_energy(
    positions: ArrayView2<f64>,
    representation: Representation,
    temperature: f64,
) -> f64 {
    let p = positions.nrows() as f64;
    let sum = match representation {
        Representation::Primitive => primitive_spring_sum(positions),
        Representation::Staged => staged_spring_sum(positions),
    };
    0.5 * p * temperature * temperature * sum
}

/// Primitive forces `−∂V/∂q^k` of every bead, written row by row.
pub fn bead_forces_into(q: ArrayView2<f64>, spec: &ChainSpec, mut out: ArrayViewMut2<f64>) {
    for (row, mut f) in q.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        spec.chain_forces_into(
            row.as_slice().expect("contiguous bead row"),
            f.as_slice_mut().expect("contiguous bead row"),
        );
    }
}

pub fn bead_forces(q: ArrayView2<f64>, spec: &ChainSpec) -> Array2<f64> {
    let mut out = Array2::zeros(q.dim());
    bead_forces_into(q, spec, out.view_mut());
    out
}

/// Forces on the staging coordinates from the bead-averaged potential
/// `(1/P) Σ_k V(q^k)`, i.e. `−∂/∂u` of that potential.
pub fn staging_forces(q: ArrayView2<f64>, spec: &ChainSpec) -> Array2<f64> {
    let mut out = bead_forces(q, spec);
    primitive_to_staging_forces(out.view_mut());
    out
}

/// In-place map of primitive bead forces to staging forces (see
/// [`staging_forces`]).
pub fn primitive_to_staging_forces(mut f: ArrayViewMut2<f64>) {
    let p = f.nrows();
    let inv_p = 1.0 / p as f64;
    let n = f.ncols();
    for j in 0..n {
        let mut total = 0.0;
        let mut prev = 0.0;
        for b in 0..p {
            let fk = f[[b, j]];
            total += fk;
            if b >= 1 {
                let k = (b + 1) as f64;
                let staged = (k - 2.0) / (k - 1.0) * prev + fk * inv_p;
                f[[b, j]] = staged;
                prev = staged;
            }
        }
        f[[0, j]] = total * inv_p;
    }
}

/// Bead-averaged potential `(1/P) Σ_k V(q^k)` of primitive positions.
pub fn mean_bead_potential(q: ArrayView2<f64>, spec: &ChainSpec) -> f64 {
    let p = q.nrows() as f64;
    q.axis_iter(Axis(0))
        .map(|row| spec.chain_potential(row.as_slice().expect("contiguous bead row")))
        .sum::<f64>()
        / p
}

fn staged_kinetic(momenta: ArrayView2<f64>, masses: &StagingMasses) -> f64 {
    momenta
        .axis_iter(Axis(0))
        .zip(&masses.kinetic)
        .map(|(row, m)| row.iter().map(|p| p * p).sum::<f64>() / (2.0 * m))
        .sum()
}

/// Sampling Hamiltonian
/// `Σ_k [p²/(2μ'_k) + μ_k P T² u²/2 + V(q^k)/P]`, weighted by `e^{−H/T}`.
pub fn pimd_hamiltonian(state: &RingPolymerState, temperature: f64, spec: &ChainSpec) -> f64 {
    let masses = StagingMasses::new(state.beads());
    let kinetic = staged_kinetic(state.momenta.view(), &masses);
    let (spring, q) = match state.representation() {
        Representation::Staged => {
            let p = state.beads() as f64;
            let u = state.positions.view();
            let spring: f64 = u
                .axis_iter(Axis(0))
                .zip(&masses.spring)
                .map(|(row, mu)| mu * row.iter().map(|x| x * x).sum::<f64>())
                .sum::<f64>()
                * 0.5
                * p
                * temperature
                * temperature;
            (spring, unstage(u))
        }
        Representation::Primitive => (
            harmonic_spring_energy(
                state.positions.view(),
                Representation::Primitive,
                temperature,
            ),
            state.positions.clone(),
        ),
    };
    kinetic + spring + mean_bead_potential(q.view(), spec)
}

/// Dynamical Hamiltonian `Σ_k [p²/2 + P² T² (q^{k+1} − q^k)²/2 + V(q^k)]`,
/// weighted by `e^{−H/(PT)}`. Requires primitive coordinates.
pub fn rpmd_hamiltonian(
    state: &RingPolymerState,
    temperature: f64,
    spec: &ChainSpec,
) -> Result<f64> {
    if state.representation() != Representation::Primitive {
        return Err(Error::invalid(
            "representation",
            "ring-polymer dynamics uses primitive coordinates",
        ));
    }
    let q = state.positions.view();
    let p = state.beads() as f64;
    let kinetic = 0.5 * state.momenta.iter().map(|x| x * x).sum::<f64>();
    let spring = 0.5 * p * p * temperature * temperature * primitive_spring_sum(q);
    Ok(kinetic + spring + p * mean_bead_potential(q, spec))
}
