//! Acceptance suite. Every test prints one `PASS`/`FAIL` line per check with
//! the pinned tolerance, then asserts. Run with `--nocapture` to see the log.

mod common;

use std::time::Instant;

use common::{ensemble, verdict, Ensemble};
use ndarray::Array2;
use qfpu::estimators::{compare_sets, replica_equivalence, sample_moment, symmetry_diagnostic};
use qfpu::harmonic_oracle::{
    level_sum_density, quartic_site_moment, quartic_site_partition, rp_normal_frequency,
    HarmonicEnsemble, Regime,
};
use qfpu::model::{ChainSpec, ModeBasis};
use qfpu::pimd_sampler::{PimdSampler, SampleSet, SamplerConfig};
use qfpu::ring_polymer::{
    bead_forces, primitive_spring_sum, rpmd_hamiltonian, stage, staged_spring_sum, staging_forces,
    unstage, Representation, RingPolymerState,
};
use qfpu::rpmd::{
    default_rpmd_dt, kubo_autocorrelation, validity_horizon, zeta2_monte_carlo, zeta_coefficients,
    KuboConfig, Observable, ZetaSet,
};
use qfpu::stats::{batch_means, Estimate, DEFAULT_BATCHES};
use qfpu::thermostat::{composition_residual, sy_weights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 8;

const DRIFT_TOLERANCE: f64 = 1e-6;
const DRIFT_STEPS: u64 = 200_000;
const Z_LIMIT: f64 = 3.0;
const QUANTUM_VARIANCE_TOLERANCE: f64 = 0.05;
const HORIZON_TARGET: f64 = 1.4;
const HORIZON_TOLERANCE: f64 = 0.05;
const BESSEL_TOLERANCE: f64 = 1e-8;
const OVERLAY_TOLERANCE: f64 = 0.10;
const KS_LEVEL: f64 = 0.01;
const ZETA_AGREEMENT: f64 = 0.05;

fn harmonic_set(
    temperature: f64,
    beads: usize,
    dt: f64,
    burn: u64,
    stride: u64,
    samples: usize,
) -> Ensemble {
    Ensemble {
        n: N,
        alpha: 0.0,
        temperature,
        beads,
        dt,
        burn,
        stride,
        samples,
        seed: 2024,
    }
}

fn mode_variance(set: &SampleSet, basis: &ModeBasis, j: usize) -> Estimate {
    batch_means(
        &set.bead_averaged(|q| basis.mode(j, q).powi(2)),
        DEFAULT_BATCHES,
    )
}

/// Bead-averaged `(q_j − ⟨q_j⟩)²` per snapshot, batched.
fn position_variance(set: &SampleSet, j: usize) -> Estimate {
    let mean = sample_moment(set, &[j], &[1]).unwrap().mean;
    batch_means(
        &set.bead_averaged(|q| (q[j - 1] - mean).powi(2)),
        DEFAULT_BATCHES,
    )
}

#[test]
fn criterion_01_energy_conservation() {
    let chain = ChainSpec::new(N, 5.0).unwrap();
    let mut ok = true;
    for (beads, temperature, dt) in [
        (1, 0.01, 0.0005),
        (1, 1.0, 0.0003),
        (16, 0.01, 0.0017),
        (16, 1.0, 0.0004),
    ] {
        let mut config = SamplerConfig::new(chain, temperature, beads);
        config.seed = 7;
        assert_eq!(config.nhc.chain_length, 5);
        let mut sampler = PimdSampler::with_step(&config, dt, 1, 0).unwrap();
        let start = Instant::now();
        let drift = sampler.relative_drift(DRIFT_STEPS).unwrap();
        ok &= verdict(
            "C1 energy conservation",
            drift < DRIFT_TOLERANCE,
            format!(
                "P={beads} T={temperature} dt={dt} steps={DRIFT_STEPS}: drift {drift:.3e} < {DRIFT_TOLERANCE:e} ({:.0} s)",
                start.elapsed().as_secs_f64()
            ),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_02_classical_harmonic_variances() {
    let start = Instant::now();
    let set = ensemble(harmonic_set(1.0, 1, 0.05, 2000, 200, 5000));
    let basis = ModeBasis::new(N);
    let mut ok = true;
    for j in 1..=N {
        let est = mode_variance(&set, &basis, j);
        let exact = 1.0 / basis.frequency(j).powi(2);
        let z = est.z_score(exact);
        ok &= verdict(
            "C2 classical variance",
            z.abs() < Z_LIMIT,
            format!(
                "j={j}: {:.4} ± {:.4} vs T/ω² = {exact:.4}, |z| = {:.2} < {Z_LIMIT}",
                est.mean,
                est.stderr,
                z.abs()
            ),
        );
    }
    println!(
        "C2 runtime {:.0} s for {} samples",
        start.elapsed().as_secs_f64(),
        set.len()
    );
    assert!(ok);
}

#[test]
fn criterion_03_quantum_harmonic_variances() {
    let temperature = 0.25;
    let basis = ModeBasis::new(N);
    let oracle = HarmonicEnsemble::new(N, temperature, Regime::Quantum).unwrap();
    let mut ok = true;
    let mut by_beads = Vec::new();
    for beads in [16, 32, 64] {
        let start = Instant::now();
        let set = ensemble(harmonic_set(temperature, beads, 0.05, 4000, 20, 10_000));
        println!(
            "C3 P={beads}: {} samples in {:.0} s",
            set.len(),
            start.elapsed().as_secs_f64()
        );
        by_beads.push((
            beads,
            (1..=N)
                .map(|j| mode_variance(&set, &basis, j))
                .collect::<Vec<_>>(),
        ));
    }
    let (_, largest) = by_beads.last().unwrap();
    for (j, est) in (1..=N).zip(largest) {
        let exact = oracle.mode_variance(j).unwrap();
        let w = basis.frequency(j);
        assert!((exact - 1.0 / (2.0 * w * (w / (2.0 * temperature)).tanh())).abs() < 1e-14);
        let rel = (est.mean - exact).abs() / exact;
        ok &= verdict(
            "C3 quantum variance",
            rel < QUANTUM_VARIANCE_TOLERANCE,
            format!("P=64 j={j}: {:.4} ± {:.4} vs {exact:.4}, rel {rel:.4} < {QUANTUM_VARIANCE_TOLERANCE}", est.mean, est.stderr),
        );
    }
    for pair in by_beads.windows(2) {
        let ((p, a), (q, b)) = (&pair[0], &pair[1]);
        for (j, (x, y)) in (1..=N).zip(a.iter().zip(b)) {
            let gap = x.separation(y);
            ok &= verdict(
                "C3 monotone in P",
                gap < Z_LIMIT,
                format!(
                    "j={j}: v(P={p}) − v(P={q}) = {:+.4}, {gap:+.2} s.e. < {Z_LIMIT}",
                    x.mean - y.mean
                ),
            );
        }
    }
    assert!(ok);
}

fn kubo_sets() -> [(usize, Ensemble); 2] {
    [
        (1, harmonic_set(1.0, 1, 0.05, 2000, 100, 4000)),
        (64, harmonic_set(1.0, 64, 0.0125, 8000, 80, 2000)),
    ]
}

#[test]
fn criterion_04_rpmd_harmonic_correlator() {
    let basis = ModeBasis::new(N);
    let times: Vec<f64> = (0..=14).map(|i| 0.1 * i as f64).collect();
    let observables: Vec<Observable> = (1..=N).map(Observable::Mode).collect();
    let mut ok = true;
    for (beads, settings) in kubo_sets() {
        let start = Instant::now();
        let set = ensemble(settings);
        let config = KuboConfig {
            dt: default_rpmd_dt(beads, 1.0),
            seed: 99,
        };
        let series = kubo_autocorrelation(&set, &observables, &times, config).unwrap();
        let mut worst: (f64, usize, f64) = (0.0, 0, 0.0);
        for (j, s) in (1..=N).zip(&series) {
            let w = basis.frequency(j);
            for (i, &t) in s.times.iter().enumerate() {
                let z = s.estimate(i).z_score((w * t).cos() / (w * w)).abs();
                if z > worst.0 {
                    worst = (z, j, t);
                }
            }
        }
        ok &= verdict(
            "C4 RPMD harmonic correlator",
            worst.0 < Z_LIMIT,
            format!(
                "P={beads}, {} trajectories, 8 modes × 15 times on [0, 1.4]: worst |z| = {:.2} (j={}, t={:.1}) < {Z_LIMIT} ({:.0} s)",
                set.len(),
                worst.0,
                worst.1,
                worst.2,
                start.elapsed().as_secs_f64()
            ),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_05_zeta2_identity() {
    let mut ok = true;
    for (beads, settings) in kubo_sets() {
        let set = ensemble(settings);
        for j in 1..=N {
            let mc = zeta2_monte_carlo(&set, j, 5).unwrap();
            let reported = zeta_coefficients(&set, j).unwrap().zeta2;
            let z = mc.z_score(1.0);
            ok &= verdict(
                "C5 zeta2",
                z.abs() < Z_LIMIT && reported == Estimate::exact(1.0),
                format!(
                    "P={beads} j={j}: ⟨p²⟩ = {:.4} ± {:.4}, |z| = {:.2} < {Z_LIMIT}; reported {} ± {}",
                    mc.mean,
                    mc.stderr,
                    z.abs(),
                    reported.mean,
                    reported.stderr
                ),
            );
        }
    }
    assert!(ok);
}

#[test]
fn criterion_06_validity_horizon() {
    let t = validity_horizon(0.1, &ModeBasis::new(N)).unwrap();
    let ok = verdict(
        "C6 t_eps",
        (t - HORIZON_TARGET).abs() <= HORIZON_TOLERANCE,
        format!("ε=0.1, N=8: {t:.4} = {HORIZON_TARGET} ± {HORIZON_TOLERANCE}"),
    );
    assert!(ok);
}

fn classical_set(alpha: f64, temperature: f64) -> Ensemble {
    Ensemble {
        n: N,
        alpha,
        temperature,
        beads: 1,
        dt: 0.02,
        burn: 5000,
        stride: 200,
        samples: 5000,
        seed: 31,
    }
}

fn quantum_set(alpha: f64, temperature: f64) -> Ensemble {
    let (dt, stride) = if temperature > 1.0 {
        (0.005, 400)
    } else {
        (0.02, 200)
    };
    Ensemble {
        n: N,
        alpha,
        temperature,
        beads: 16,
        dt,
        burn: 20 * stride,
        stride,
        samples: 2500,
        seed: 37,
    }
}

#[test]
fn criterion_07_bessel_closed_forms() {
    let mut ok = true;
    for (t, alpha) in [(0.1, 1.0), (1.0, 5.0), (5.0, 5.0)] {
        let z_quad = common::quartic_site_integral(t, alpha, 0);
        let f_quad = common::quartic_site_integral(t, alpha, 1) / z_quad;
        let z = quartic_site_partition(t, alpha).unwrap();
        let f = quartic_site_moment(t, alpha).unwrap();
        let (ez, ef) = (((z - z_quad) / z_quad).abs(), ((f - f_quad) / f_quad).abs());
        ok &= verdict(
            "C7 closed forms",
            ez < BESSEL_TOLERANCE && ef < BESSEL_TOLERANCE,
            format!("T={t} α={alpha}: Z rel {ez:.1e}, f rel {ef:.1e} < {BESSEL_TOLERANCE:e}"),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_07_overlay_at_high_temperature() {
    let mut ok = true;
    for alpha in [1.0, 5.0] {
        for t in [1.0, 5.0] {
            let set = ensemble(classical_set(alpha, t));
            let sampled = sample_moment(&set, &[4], &[2]).unwrap();
            let f = quartic_site_moment(t, alpha).unwrap();
            let rel = (sampled.mean - f).abs() / f;
            ok &= verdict(
                "C7 overlay",
                rel < OVERLAY_TOLERANCE,
                format!(
                    "α={alpha} T={t}: sampled ⟨q4²⟩ = {:.4} ± {:.4} vs f(T) = {f:.4}, rel {rel:.3} < {OVERLAY_TOLERANCE}",
                    sampled.mean, sampled.stderr
                ),
            );
        }
    }
    assert!(ok, "sampled ⟨q4²⟩ is not within {OVERLAY_TOLERANCE} of the frozen-neighbour moment (see README)");
}

#[test]
fn criterion_08_quantum_broadening() {
    let mut ok = true;
    for alpha in [1.0, 5.0] {
        let start = Instant::now();
        let classical = ensemble(classical_set(alpha, 0.01));
        let quantum = ensemble(quantum_set(alpha, 0.01));
        let (vc, vq) = (
            position_variance(&classical, 4),
            position_variance(&quantum, 4),
        );
        let gap = vq.separation(&vc);
        ok &= verdict(
            "C8 broadening",
            vq.mean > vc.mean && gap >= Z_LIMIT,
            format!(
                "T=0.01 α={alpha}: var q4 P=16 {:.5} ± {:.5} vs P=1 {:.5} ± {:.5}, {gap:.1} s.e. ≥ {Z_LIMIT} ({:.0} s)",
                vq.mean,
                vq.stderr,
                vc.mean,
                vc.stderr,
                start.elapsed().as_secs_f64()
            ),
        );

        let start = Instant::now();
        let classical = ensemble(classical_set(alpha, 5.0));
        let quantum = ensemble(quantum_set(alpha, 5.0));
        let ks = compare_sets(&quantum, &classical, 4, KS_LEVEL).unwrap();
        ok &= verdict(
            "C8 high-T agreement",
            ks.passed,
            format!(
                "T=5 α={alpha}: KS D = {:.4} < {:.4} at level {KS_LEVEL} ({:.0} s)",
                ks.statistic,
                ks.critical,
                start.elapsed().as_secs_f64()
            ),
        );
    }
    assert!(ok);
}

fn zeta_pair(alpha: f64) -> (ZetaSet, ZetaSet) {
    let j = N / 2;
    let classical = ensemble(classical_set(alpha, 1.0));
    let quantum = ensemble(quantum_set(alpha, 1.0));
    (
        zeta_coefficients(&classical, j).unwrap(),
        zeta_coefficients(&quantum, j).unwrap(),
    )
}

#[test]
fn criterion_09_zeta6_ordering() {
    let (zc, zq) = zeta_pair(0.4);
    let gap = zq.zeta6.separation(&zc.zeta6);
    let ok = verdict(
        "C9 zeta6 ordering",
        zq.zeta6.mean > zc.zeta6.mean && gap >= Z_LIMIT,
        format!(
            "T=1 α=0.4 j=4: ζ6 P=16 {:.4} ± {:.4} vs P=1 {:.4} ± {:.4}, {gap:.1} s.e. ≥ {Z_LIMIT}",
            zq.zeta6.mean, zq.zeta6.stderr, zc.zeta6.mean, zc.zeta6.stderr
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_09_small_alpha_agreement() {
    let (zc, zq) = zeta_pair(0.1);
    let mut ok = true;
    for (name, c, q) in [("ζ4", zc.zeta4, zq.zeta4), ("ζ6", zc.zeta6, zq.zeta6)] {
        let rel = (q.mean - c.mean).abs() / c.mean;
        ok &= verdict(
            "C9 small-alpha agreement",
            rel < ZETA_AGREEMENT,
            format!(
                "T=1 α=0.1 j=4: {name} P=16 {:.4} ± {:.4} vs P=1 {:.4} ± {:.4}, rel {rel:.4} < {ZETA_AGREEMENT}",
                q.mean, q.stderr, c.mean, c.stderr
            ),
        );
    }
    let (large_c, large_q) = zeta_pair(0.4);
    let (small, large) = (
        (zq.zeta6.mean - zc.zeta6.mean) / zc.zeta6.mean,
        (large_q.zeta6.mean - large_c.zeta6.mean) / large_c.zeta6.mean,
    );
    verdict(
        "C9 trend",
        small < large,
        format!("ζ6 quantum excess {small:.4} at α=0.1 < {large:.4} at α=0.4"),
    );
    assert!(ok, "quantum and classical ζ coefficients differ by more than {ZETA_AGREEMENT} at α=0.1 (see README)");
}

fn random_beads(rng: &mut ChaCha8Rng, beads: usize, n: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((beads, n), |_| scale * (2.0 * rng.random::<f64>() - 1.0))
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_10_structural_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let spec = ChainSpec::new(N, 5.0).unwrap();
    let mut ok = true;

    let mut round_trip: f64 = 0.0;
    let mut decoupling: f64 = 0.0;
    let mut chain_rule: f64 = 0.0;
    for &beads in &[1, 2, 3, 16, 64] {
        for _ in 0..20 {
            let q = random_beads(&mut rng, beads, N, 1.0);
            let u = stage(q.view());
            round_trip = round_trip.max(max_abs_diff(&unstage(u.view()), &q));
            let (a, b) = (primitive_spring_sum(q.view()), staged_spring_sum(u.view()));
            decoupling = decoupling.max((a - b).abs() / a.abs().max(1.0));

            let mut jacobian = Array2::zeros((beads, beads));
            for m in 0..beads {
                let mut e = Array2::zeros((beads, 1));
                e[[m, 0]] = 1.0;
                jacobian.column_mut(m).assign(&unstage(e.view()).column(0));
            }
            let primitive = bead_forces(q.view(), &spec);
            let expected = jacobian.t().dot(&primitive) / beads as f64;
            let scale = expected.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            chain_rule =
                chain_rule.max(max_abs_diff(&staging_forces(q.view(), &spec), &expected) / scale);
        }
    }
    ok &= verdict(
        "C10 staging round trip",
        round_trip < 1e-12,
        format!("max error {round_trip:.1e} < 1e-12"),
    );
    ok &= verdict(
        "C10 decoupling identity",
        decoupling < 1e-10,
        format!("max error {decoupling:.1e} < 1e-10"),
    );
    ok &= verdict(
        "C10 staging forces",
        chain_rule < 1e-10,
        format!("max error {chain_rule:.1e} < 1e-10"),
    );

    let mut gradient: f64 = 0.0;
    for _ in 0..50 {
        let q: Vec<f64> = (0..N).map(|_| rng.random::<f64>() - 0.5).collect();
        let numeric = common::numerical_gradient(&|x| spec.chain_potential(x), &q, 1e-5);
        let forces = spec.chain_forces(&q);
        let norm = numeric.iter().map(|g| g * g).sum::<f64>().sqrt();
        let err = forces
            .iter()
            .zip(&numeric)
            .map(|(f, g)| (f + g).powi(2))
            .sum::<f64>()
            .sqrt();
        gradient = gradient.max(err / norm);
    }
    ok &= verdict(
        "C10 force vs gradient",
        gradient < 1e-6,
        format!("max rel error {gradient:.1e} < 1e-6"),
    );

    let basis = ModeBasis::new(N);
    let harmonic = ChainSpec::harmonic(N).unwrap();
    let mut omega: f64 = 0.0;
    let mut hessian: f64 = 0.0;
    for (beads, t) in [(1, 1.0), (4, 0.5), (16, 0.25), (32, 1.0)] {
        let h = common::ring_polymer_hessian(N, beads, t);
        let mut library: Vec<f64> = (1..=N)
            .flat_map(|j| (1..=beads).map(move |k| (j, k)))
            .map(|(j, k)| rp_normal_frequency(&basis, j, k, t, beads).unwrap())
            .collect();
        library.sort_by(f64::total_cmp);
        let dense: Vec<f64> = common::sorted_eigenvalues(h.clone())
            .into_iter()
            .map(f64::sqrt)
            .collect();
        for (a, b) in library.iter().zip(&dense) {
            omega = omega.max((a - b).abs() / b);
        }
        let q = random_beads(&mut rng, beads, N, 1.0);
        let mut state = RingPolymerState::zeros(beads, N, Representation::Primitive);
        state.positions.assign(&q);
        let x = nalgebra::DVector::from_iterator(N * beads, q.iter().copied());
        let quadratic = 0.5 * x.dot(&(&h * &x));
        let energy = rpmd_hamiltonian(&state, t, &harmonic).unwrap();
        hessian = hessian.max((energy - quadratic).abs() / quadratic);
    }
    ok &= verdict(
        "C10 ring-polymer frequencies",
        omega < 1e-8,
        format!("max rel error {omega:.1e} < 1e-8"),
    );
    ok &= verdict(
        "C10 assembled Hessian",
        hessian < 1e-12,
        format!("energy rel error {hessian:.1e} < 1e-12"),
    );

    let mut poisson: f64 = 0.0;
    for t in [0.1, 0.5, 1.0, 2.0] {
        let oracle = HarmonicEnsemble::new(N, t, Regime::Quantum).unwrap();
        for j in 1..=N {
            let w = basis.frequency(j);
            if w / t < 0.5 {
                continue;
            }
            let sd = oracle.mode_variance(j).unwrap().sqrt();
            for i in -12..=12 {
                let eta = 0.25 * i as f64 * sd;
                let closed = oracle.mode_density(&[eta], &[j]).unwrap();
                let brute = common::hermite_density(w, t, eta, 400);
                let library = level_sum_density(w, t, eta, 400).value;
                poisson = poisson
                    .max((closed - brute).abs() / closed)
                    .max((library - brute).abs() / brute);
            }
        }
    }
    ok &= verdict(
        "C10 Poisson kernel",
        poisson < 1e-8,
        format!("max rel error {poisson:.1e} < 1e-8 (ω/T ≥ 0.5)"),
    );

    for beads in [1, 16] {
        let set = ensemble(if beads == 1 {
            classical_set(0.4, 1.0)
        } else {
            quantum_set(0.4, 1.0)
        });
        let report = symmetry_diagnostic(&set, &[1, 2, 3, 4], KS_LEVEL).unwrap();
        for c in &report.comparisons {
            ok &= verdict(
                "C10 mirror symmetry",
                c.passed,
                format!(
                    "P={beads} {}: D = {:.4} < {:.4} at level {KS_LEVEL}",
                    c.label, c.statistic, c.critical
                ),
            );
        }
        if beads > 1 {
            for j in [1, 4] {
                let c = replica_equivalence(&set, j, KS_LEVEL).unwrap();
                ok &= verdict(
                    "C10 replica equivalence",
                    c.passed,
                    format!(
                        "P={beads} j={j}: D = {:.4} < {:.4} at level {KS_LEVEL}",
                        c.statistic, c.critical
                    ),
                );
            }
        }
    }

    let w = sy_weights(6).unwrap();
    let sums: Vec<f64> = [1, 3, 5]
        .iter()
        .map(|&p| w.iter().map(|x| x.powi(p)).sum())
        .collect();
    let residual = (sums[0] - 1.0).abs().max(sums[1].abs()).max(sums[2].abs());
    ok &= verdict(
        "C10 SY order conditions",
        residual < 1e-12 && composition_residual(&w) < 1e-12 && w.iter().eq(w.iter().rev()),
        format!("Σw − 1, Σw³, Σw⁵ ≤ {residual:.1e} < 1e-12, palindromic"),
    );
    assert!(ok);
}
