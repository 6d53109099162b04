//! Configurational statistics of sampled chains.
//!
//! Histograms are built over the bead-augmented cloud: every bead of every
//! snapshot contributes one point, since each bead is distributed like the
//! quantum particle. Kolmogorov-Smirnov comparisons use pooled bead values
//! for the statistic. Their critical values use the effective number of
//! snapshots, the count divided by the integrated autocorrelation time of the
//! bead-averaged coordinate.

use std::io::Write;

use ndarray::Axis;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ChainSpec;
use crate::pimd_sampler::SampleSet;
use crate::quadrature::integrate;
use crate::stats::{
    batch_means, integrated_autocorrelation_time, ks_critical_two_sample, ks_two_sample_sorted,
    Estimate, DEFAULT_BATCHES,
};

/// Largest number of particles in a joint histogram.
pub const MAX_DIMENSIONS: usize = 3;
/// Upper bound on the automatic bin count per dimension.
pub const MAX_AUTO_BINS: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub enum Binning {
    /// Freedman-Diaconis per dimension, capped at [`MAX_AUTO_BINS`].
    Auto,
    /// Same count in every dimension.
    Uniform(usize),
    /// Explicit edges per dimension.
    Edges(Vec<Vec<f64>>),
}

/// Normalized histogram of `(q_{j_1}, …, q_{j_d})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionEstimate {
    pub particles: Vec<usize>,
    pub edges: Vec<Vec<f64>>,
    /// Row-major, last dimension fastest.
    pub density: Vec<f64>,
    /// Points histogrammed (snapshots × beads).
    pub count: usize,
    /// One normalized histogram per bead on the same grid.
    pub bead_density: Vec<Vec<f64>>,
}

fn check_subset(samples: &SampleSet, particles: &[usize]) -> Result<()> {
    if particles.len() > MAX_DIMENSIONS {
        return Err(Error::TooManyDimensions(particles.len()));
    }
    check_particles(samples, particles)
}

fn check_particles(samples: &SampleSet, particles: &[usize]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if particles.is_empty() {
        return Err(Error::invalid("particles", "must not be empty"));
    }
    let n = samples.n_particles();
    if let Some(&j) = particles.iter().find(|&&j| j == 0 || j > n) {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    Ok(())
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let x = p * (sorted.len() - 1) as f64;
    let i = x.floor() as usize;
    let f = x - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// Freedman-Diaconis bin count for `values`, at least 1 and at most
/// [`MAX_AUTO_BINS`].
pub fn freedman_diaconis_bins(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let range = v[v.len() - 1] - v[0];
    let iqr = quantile(&v, 0.75) - quantile(&v, 0.25);
    if !(range > 0.0) || !(iqr > 0.0) {
        return 1;
    }
    let h = 2.0 * iqr / (v.len() as f64).cbrt();
    ((range / h).ceil() as usize).clamp(1, MAX_AUTO_BINS)
}

fn uniform_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 1e-9 * (hi - lo).abs().max(1e-12);
    let (lo, hi) = (lo - pad, hi + pad);
    (0..=bins)
        .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
        .collect()
}

fn locate(edges: &[f64], x: f64) -> Option<usize> {
    if x < edges[0] || x > edges[edges.len() - 1] {
        return None;
    }
    let i = edges.partition_point(|&e| e <= x);
    Some(i.saturating_sub(1).min(edges.len() - 2))
}

/// Values of `q_j` for every bead of every snapshot, bead-major within a
/// snapshot.
pub fn bead_cloud(samples: &SampleSet, j: usize) -> Vec<f64> {
    samples
        .snapshots
        .iter()
        .flat_map(|s| s.column(j - 1).to_vec())
        .collect()
}

impl DistributionEstimate {
    pub fn dims(&self) -> usize {
        self.edges.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.len() - 1).collect()
    }

    pub fn centers(&self, dim: usize) -> Vec<f64> {
        self.edges[dim]
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    fn cell_volume(&self, index: &[usize]) -> f64 {
        index
            .iter()
            .zip(&self.edges)
            .map(|(&i, e)| e[i + 1] - e[i])
            .product()
    }

    fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for d in (0..shape.len()).rev() {
            idx[d] = flat % shape[d];
            flat /= shape[d];
        }
        idx
    }

    /// `Σ density · cell volume`.
    pub fn integral(&self) -> f64 {
        self.density
            .iter()
            .enumerate()
            .map(|(i, d)| d * self.cell_volume(&self.unravel(i)))
            .sum()
    }

    /// Sum out particle `particle`, which must belong to the subset.
    pub fn marginalize(&self, particle: usize) -> Result<DistributionEstimate> {
        let axis = self
            .particles
            .iter()
            .position(|&p| p == particle)
            .ok_or_else(|| {
                Error::invalid("particle", format!("{particle} is not in the subset"))
            })?;
        if self.dims() < 2 {
            return Err(Error::invalid(
                "particle",
                "cannot marginalize a one-dimensional histogram",
            ));
        }
        let shape = self.shape();
        let reduce = |dens: &[f64]| -> Vec<f64> {
            let arr = ndarray::ArrayViewD::from_shape(shape.clone(), dens).expect("shape");
            let widths: Vec<f64> = self.edges[axis].windows(2).map(|w| w[1] - w[0]).collect();
            let mut out = ndarray::ArrayD::<f64>::zeros(arr.index_axis(Axis(axis), 0).shape());
            for (i, slice) in arr.axis_iter(Axis(axis)).enumerate() {
                out.scaled_add(widths[i], &slice);
            }
            out.iter().copied().collect()
        };
        let mut particles = self.particles.clone();
        particles.remove(axis);
        let mut edges = self.edges.clone();
        edges.remove(axis);
        Ok(DistributionEstimate {
            particles,
            edges,
            density: reduce(&self.density),
            count: self.count,
            bead_density: self.bead_density.iter().map(|d| reduce(d)).collect(),
        })
    }

    /// `∫ Π q_i^{n_i} Q` by the midpoint rule over bins.
    pub fn moment(&self, powers: &[u32]) -> Result<f64> {
        if powers.len() != self.dims() {
            return Err(Error::LengthMismatch {
                expected: self.dims(),
                found: powers.len(),
            });
        }
        let centers: Vec<Vec<f64>> = (0..self.dims()).map(|d| self.centers(d)).collect();
        Ok(self
            .density
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let idx = self.unravel(i);
                let mono: f64 = idx
                    .iter()
                    .zip(powers)
                    .enumerate()
                    .map(|(dim, (&k, &p))| centers[dim][k].powi(p as i32))
                    .product();
                d * mono * self.cell_volume(&idx)
            })
            .sum())
    }

    /// Columns `q<j>…,density`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.particles.iter().map(|j| format!("q{j}")).collect();
        header.push("density".into());
        w.write_record(&header)?;
        let centers: Vec<Vec<f64>> = (0..self.dims()).map(|d| self.centers(d)).collect();
        for (i, d) in self.density.iter().enumerate() {
            let mut rec: Vec<String> = self
                .unravel(i)
                .iter()
                .enumerate()
                .map(|(dim, &k)| format!("{:?}", centers[dim][k]))
                .collect();
            rec.push(format!("{d:?}"));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn histogram(
    particles: Vec<usize>,
    edges: Vec<Vec<f64>>,
    points: &[Vec<f64>],
    bead_of: impl Fn(usize) -> usize,
    beads: usize,
) -> DistributionEstimate {
    let shape: Vec<usize> = edges.iter().map(|e| e.len() - 1).collect();
    let cells: usize = shape.iter().product();
    let mut counts = vec![0.0; cells];
    let mut bead_counts = vec![vec![0.0; cells]; beads];
    let mut bead_totals = vec![0usize; beads];
    let n_points = points[0].len();
    'points: for i in 0..n_points {
        let mut flat = 0;
        for (d, e) in edges.iter().enumerate() {
            match locate(e, points[d][i]) {
                Some(k) => flat = flat * shape[d] + k,
                None => continue 'points,
            }
        }
        counts[flat] += 1.0;
        let b = bead_of(i);
        bead_counts[b][flat] += 1.0;
        bead_totals[b] += 1;
    }
    let mut est = DistributionEstimate {
        particles,
        edges,
        density: vec![0.0; cells],
        count: n_points,
        bead_density: vec![vec![0.0; cells]; beads],
    };
    for i in 0..cells {
        let vol = est.cell_volume(&est.unravel(i));
        est.density[i] = counts[i] / (n_points as f64 * vol);
        for b in 0..beads {
            if bead_totals[b] > 0 {
                est.bead_density[b][i] = bead_counts[b][i] / (bead_totals[b] as f64 * vol);
            }
        }
    }
    est
}

fn resolve_edges(binning: &Binning, columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    match binning {
        Binning::Auto => Ok(columns
            .iter()
            .map(|c| uniform_edges(c, freedman_diaconis_bins(c)))
            .collect()),
        Binning::Uniform(b) => {
            if *b == 0 {
                return Err(Error::invalid("bins", "must be at least 1"));
            }
            Ok(columns.iter().map(|c| uniform_edges(c, *b)).collect())
        }
        Binning::Edges(e) => {
            if e.len() != columns.len() {
                return Err(Error::LengthMismatch {
                    expected: columns.len(),
                    found: e.len(),
                });
            }
            if e.iter()
                .any(|x| x.len() < 2 || x.windows(2).any(|w| w[0] >= w[1]))
            {
                return Err(Error::invalid(
                    "edges",
                    "need at least two increasing edges",
                ));
            }
            Ok(e.clone())
        }
    }
}

/// Joint histogram `Q_J` of the particles `J` (1-based, at most three).
pub fn estimate_distribution(
    samples: &SampleSet,
    particles: &[usize],
    binning: &Binning,
) -> Result<DistributionEstimate> {
    check_subset(samples, particles)?;
    let columns: Vec<Vec<f64>> = particles.iter().map(|&j| bead_cloud(samples, j)).collect();
    let edges = resolve_edges(binning, &columns)?;
    let beads = samples.beads();
    Ok(histogram(
        particles.to_vec(),
        edges,
        &columns,
        |i| i % beads,
        beads,
    ))
}

/// `g(q) = (1/N) Σ_j Q_j(q)` on a common grid.
pub fn total_density(samples: &SampleSet, binning: &Binning) -> Result<DistributionEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let n = samples.n_particles();
    let beads = samples.beads();
    let pooled: Vec<f64> = samples
        .snapshots
        .iter()
        .flat_map(|s| s.iter().copied().collect::<Vec<_>>())
        .collect();
    let edges = resolve_edges(binning, std::slice::from_ref(&pooled))?;
    let mut est = histogram(vec![0], edges, &[pooled], |i| (i / n) % beads, beads);
    est.particles = (1..=n).collect();
    Ok(est)
}

/// `⟨Π q_{j_i}^{n_i}⟩` averaged over beads, with a batch-means error.
pub fn sample_moment(samples: &SampleSet, particles: &[usize], powers: &[u32]) -> Result<Estimate> {
    check_subset(samples, particles)?;
    if particles.len() != powers.len() {
        return Err(Error::LengthMismatch {
            expected: particles.len(),
            found: powers.len(),
        });
    }
    let values = samples.bead_averaged(|q| {
        particles
            .iter()
            .zip(powers)
            .map(|(&j, &p)| q[j - 1].powi(p as i32))
            .product()
    });
    Ok(batch_means(&values, DEFAULT_BATCHES))
}

/// Bound `max|f''| Δq²/24` on the midpoint-rule error per unit mass, for
/// the monomial `q^power` over the histogram's range.
pub fn midpoint_error_bound(dist: &DistributionEstimate, power: u32) -> f64 {
    let e = &dist.edges[0];
    let width = e.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let reach = e[0].abs().max(e[e.len() - 1].abs());
    let p = power as f64;
    let second = if power < 2 {
        0.0
    } else {
        p * (p - 1.0) * reach.powi(power as i32 - 2)
    };
    second * width * width / 24.0
}

/// Boltzmann density `e^{−V(q)/T}/∫e^{−V/T}` of a particle bound to a wall
/// by a single bond, evaluated on `q_grid`.
pub fn wall_distribution(q_grid: &[f64], temperature: f64, spec: &ChainSpec) -> Result<Vec<f64>> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::invalid("temperature", "must be positive"));
    }
    let mut stationary = vec![0.0];
    if let Ok(r) = spec.minimum_displacement() {
        stationary.push(r);
    }
    let v0 = stationary
        .iter()
        .map(|&r| spec.pair_potential(r))
        .fold(f64::INFINITY, f64::min);
    let weight = |q: f64| (-(spec.pair_potential(q) - v0) / temperature).exp();
    let reach = |dir: f64| {
        let mut x = dir * 0.1;
        while spec.pair_potential(x) - v0 < 60.0 * temperature {
            x *= 1.5;
        }
        x
    };
    let (lo, hi) = (reach(-1.0), reach(1.0));
    let mut cuts = stationary.clone();
    cuts.retain(|&c| c > lo && c < hi);
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let z: f64 = cuts
        .windows(2)
        .map(|w| integrate(weight, w[0], w[1], 1e-12))
        .sum();
    Ok(q_grid.iter().map(|&q| weight(q) / z).collect())
}

/// `S_J(κ) = ∫ Q_J(q) e^{iκ·q} dq` over bin centres, one value per row of
/// `kappa` (each of the histogram's dimension).
pub fn structure_factor(dist: &DistributionEstimate, kappa: &[Vec<f64>]) -> Result<Vec<Complex64>> {
    let centers: Vec<Vec<f64>> = (0..dist.dims()).map(|d| dist.centers(d)).collect();
    let cells: Vec<(Vec<f64>, f64)> = dist
        .density
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let idx = dist.unravel(i);
            let x: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(dim, &k)| centers[dim][k])
                .collect();
            (x, d * dist.cell_volume(&idx))
        })
        .collect();
    let norm: f64 = cells.iter().map(|c| c.1).sum();
    kappa
        .iter()
        .map(|k| {
            if k.len() != dist.dims() {
                return Err(Error::LengthMismatch {
                    expected: dist.dims(),
                    found: k.len(),
                });
            }
            Ok(cells
                .iter()
                .map(|(x, w)| {
                    let phase: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
                    Complex64::from_polar(*w, phase)
                })
                .sum::<Complex64>()
                / norm)
        })
        .collect()
}

/// Columns `kappa<d>…,re,im`.
pub fn write_structure_factor_csv<W: Write>(
    kappa: &[Vec<f64>],
    values: &[Complex64],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dims = kappa.first().map_or(1, |k| k.len());
    let mut header: Vec<String> = (1..=dims).map(|d| format!("kappa{d}")).collect();
    header.push("re".into());
    header.push("im".into());
    w.write_record(&header)?;
    for (k, s) in kappa.iter().zip(values) {
        let mut rec: Vec<String> = k.iter().map(|x| format!("{x:?}")).collect();
        rec.push(format!("{:?}", s.re));
        rec.push(format!("{:?}", s.im));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Which bead supplies the abscissa of a force section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeadSelect {
    /// 1-based bead index.
    Bead(usize),
    Centroid,
}

/// Scatter of `(q_j, F_j)` with `F_j = −(1/P) Σ_k ∂V/∂q_j^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceFieldSection {
    pub particle: usize,
    pub positions: Vec<f64>,
    pub forces: Vec<f64>,
    pub mean_force: Estimate,
    /// `(α, β)` of the wall envelope attached to the first or last particle.
    pub envelope: Option<WallSide>,
}

/// Boundary particle whose force is bounded by a single wall bond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WallSide {
    Left { alpha: f64, beta: f64 },
    Right { alpha: f64, beta: f64 },
}

impl WallSide {
    /// `F_L(q) = −q − αq² − βq³` on the left, `F_R(q) = −q + αq² − βq³` on
    /// the right.
    pub fn force(&self, q: f64) -> f64 {
        match *self {
            WallSide::Left { alpha, beta } => -q - alpha * q * q - beta * q * q * q,
            WallSide::Right { alpha, beta } => -q + alpha * q * q - beta * q * q * q,
        }
    }
}

pub fn force_sections(
    samples: &SampleSet,
    j: usize,
    select: BeadSelect,
) -> Result<ForceFieldSection> {
    check_subset(samples, &[j])?;
    let spec = samples.chain()?;
    let (n, beads) = (samples.n_particles(), samples.beads());
    if let BeadSelect::Bead(k) = select {
        if k == 0 || k > beads {
            return Err(Error::IndexOutOfRange { index: k, n: beads });
        }
    }
    let mut positions = Vec::with_capacity(samples.len());
    let mut forces = Vec::with_capacity(samples.len());
    let mut buf = vec![0.0; n];
    for s in &samples.snapshots {
        let mut f = 0.0;
        for row in s.axis_iter(Axis(0)) {
            spec.chain_forces_into(row.as_slice().expect("contiguous bead row"), &mut buf);
            f += buf[j - 1];
        }
        forces.push(f / beads as f64);
        positions.push(match select {
            BeadSelect::Bead(k) => s[[k - 1, j - 1]],
            BeadSelect::Centroid => s.column(j - 1).sum() / beads as f64,
        });
    }
    let (alpha, beta) = (spec.alpha(), spec.beta());
    let envelope = if j == 1 {
        Some(WallSide::Left { alpha, beta })
    } else if j == n {
        Some(WallSide::Right { alpha, beta })
    } else {
        None
    };
    Ok(ForceFieldSection {
        particle: j,
        mean_force: batch_means(&forces, DEFAULT_BATCHES),
        positions,
        forces,
        envelope,
    })
}

/// One Kolmogorov-Smirnov comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsComparison {
    pub label: String,
    pub statistic: f64,
    pub critical: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub level: f64,
    pub comparisons: Vec<KsComparison>,
    /// `Var(q_j) / Var(q_{N+1−j})` per compared pair.
    pub variance_ratios: Vec<f64>,
}

impl SymmetryReport {
    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.passed)
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Snapshot count over the integrated autocorrelation time of the
/// bead-averaged `q_j`, at least 2.
pub fn effective_size(samples: &SampleSet, j: usize) -> usize {
    let series = samples.bead_averaged(|q| q[j - 1]);
    let tau = integrated_autocorrelation_time(&series);
    ((samples.len() as f64 / tau).floor() as usize).max(2)
}

fn cloud_range(samples: &SampleSet, j: usize, range: std::ops::Range<usize>) -> Vec<f64> {
    samples.snapshots[range]
        .iter()
        .flat_map(|s| s.column(j - 1).to_vec())
        .collect()
}

/// Compare `Q_J(q)` with `Q_{J*}(−q)`, `J* = {N+1−j}`, particle by particle.
///
/// `q_j` and `q_{N+1−j}` are correlated within a snapshot, so `q_j` is taken
/// from the first half of the snapshots and the mirror from the second.
pub fn symmetry_diagnostic(
    samples: &SampleSet,
    particles: &[usize],
    level: f64,
) -> Result<SymmetryReport> {
    check_particles(samples, particles)?;
    if samples.len() < 4 {
        return Err(Error::invalid("samples", "need at least four snapshots"));
    }
    let n = samples.n_particles();
    let m = samples.len();
    let half = m / 2;
    let mut comparisons = Vec::new();
    let mut variance_ratios = Vec::new();
    for &j in particles {
        let mirror = n + 1 - j;
        let a = bead_cloud(samples, j);
        let b: Vec<f64> = bead_cloud(samples, mirror).iter().map(|x| -x).collect();
        variance_ratios.push(crate::stats::variance(&a) / crate::stats::variance(&b));
        let first = cloud_range(samples, j, 0..half);
        let second: Vec<f64> = cloud_range(samples, mirror, half..m)
            .iter()
            .map(|x| -x)
            .collect();
        let statistic = ks_two_sample_sorted(&sorted(first), &sorted(second));
        let n_eff = effective_size(samples, j).min(effective_size(samples, mirror)) / 2;
        let critical = ks_critical_two_sample(level, n_eff.max(1), n_eff.max(1));
        comparisons.push(KsComparison {
            label: format!("q{j} vs -q{mirror}"),
            statistic,
            critical,
            passed: statistic < critical,
        });
    }
    Ok(SymmetryReport {
        level,
        comparisons,
        variance_ratios,
    })
}

/// Largest pairwise KS statistic between the per-bead samples of `q_j`.
///
/// The critical value is taken at `level / (P(P−1)/2)` so that `level` bounds
/// the chance that any one of the pairs rejects.
pub fn replica_equivalence(samples: &SampleSet, j: usize, level: f64) -> Result<KsComparison> {
    check_subset(samples, &[j])?;
    let beads = samples.beads();
    let per_bead: Vec<Vec<f64>> = (0..beads)
        .map(|k| sorted(samples.snapshots.iter().map(|s| s[[k, j - 1]]).collect()))
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..beads {
        for b in a + 1..beads {
            worst = worst.max(ks_two_sample_sorted(&per_bead[a], &per_bead[b]));
        }
    }
    let m = effective_size(samples, j);
    let pairs = (beads * (beads - 1) / 2).max(1);
    let critical = ks_critical_two_sample(level / pairs as f64, m, m);
    Ok(KsComparison {
        label: format!("beads of q{j}"),
        statistic: worst,
        critical,
        passed: worst < critical,
    })
}

/// Two sets of snapshots of particle `j` compared by KS.
pub fn compare_sets(a: &SampleSet, b: &SampleSet, j: usize, level: f64) -> Result<KsComparison> {
    check_subset(a, &[j])?;
    check_subset(b, &[j])?;
    let statistic = ks_two_sample_sorted(&sorted(bead_cloud(a, j)), &sorted(bead_cloud(b, j)));
    let critical = ks_critical_two_sample(level, effective_size(a, j), effective_size(b, j));
    Ok(KsComparison {
        label: format!("q{j}: P={} vs P={}", a.beads(), b.beads()),
        statistic,
        critical,
        passed: statistic < critical,
    })
}
