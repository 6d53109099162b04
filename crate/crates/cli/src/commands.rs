//! The four subcommands.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use qfpu::archive::{read_archive, write_archive};
use qfpu::estimators::{
    compare_sets, estimate_distribution, force_sections, replica_equivalence, sample_moment,
    structure_factor, symmetry_diagnostic, wall_distribution, BeadSelect, Binning, KsComparison,
    SymmetryReport,
};
use qfpu::harmonic_oracle::{
    quartic_site_moment, quartic_site_partition, rp_normal_frequency, HarmonicEnsemble, Regime,
};
use qfpu::model::ModeBasis;
use qfpu::pimd_sampler::{run, SampleMeta, SampleSet};
use qfpu::rpmd::{
    anharmonicity_warning, default_rpmd_dt, kubo_autocorrelation, t6_expansion, validity_horizon,
    zeta2_monte_carlo, zeta_coefficients, KuboConfig, Observable, ZetaSet,
};
use qfpu::stats::{batch_means, Estimate, DEFAULT_BATCHES};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{read_json, OutputDir};

pub const ARCHIVE_FILE: &str = "snapshots.qfpu";
pub const CONFIG_FILE: &str = "config.toml";

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let m = (n.max(2) - 1) as f64;
    (0..n.max(2)).map(|i| a + (b - a) * i as f64 / m).collect()
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftSummary {
    pub max_relative: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Equipartition {
    pub target: f64,
    pub estimate: Estimate,
    pub z: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub config: RunConfig,
    pub meta: SampleMeta,
    pub n_samples: usize,
    pub drift: DriftSummary,
    pub equipartition: Equipartition,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

fn drift_summary(set: &SampleSet, tolerance: f64) -> DriftSummary {
    let max_relative = set.max_relative_drift();
    DriftSummary {
        max_relative,
        tolerance,
        passed: max_relative < tolerance,
    }
}

fn equipartition(set: &SampleSet) -> Equipartition {
    let target = set.meta.temperature;
    let estimate = batch_means(&set.kinetic_temperature, DEFAULT_BATCHES);
    let z = estimate.z_score(target);
    Equipartition {
        target,
        estimate,
        z,
        passed: z < 3.0,
    }
}

/// Sample the ring polymer and write `config.toml`, the snapshot archive and
/// `sample.json` to the output directory.
pub fn sample(config: &RunConfig) -> Result<SampleSummary, CliError> {
    let sampler = config.sampler_config()?;
    let set = run(&sampler)?;
    let mut out = OutputDir::create(&config.output.dir)?;
    out.write_text(CONFIG_FILE, &config.to_toml())?;
    out.write_with(ARCHIVE_FILE, |w| Ok(write_archive(&set, w)?))?;
    let mut warnings = Vec::new();
    let drift = drift_summary(&set, config.sampler.drift_tolerance);
    if !drift.passed {
        warnings.push(format!(
            "extended energy drifted by {:e} (tolerance {:e})",
            drift.max_relative, drift.tolerance
        ));
    }
    let mut summary = SampleSummary {
        config: config.clone(),
        meta: set.meta.clone(),
        n_samples: set.len(),
        drift,
        equipartition: equipartition(&set),
        warnings,
        files: Vec::new(),
    };
    summary.files = out.written().iter().map(|p| file_name(p)).collect();
    summary.files.push("sample.json".into());
    out.write_json("sample.json", &summary)?;
    Ok(summary)
}

fn check_archive(config: &RunConfig, set: &SampleSet) -> Result<(), CliError> {
    let m = &set.meta;
    let spec = config.chain_spec()?;
    let mut problems = Vec::new();
    if m.n_particles != spec.n_particles() {
        problems.push(format!(
            "n_particles {} vs {}",
            m.n_particles,
            spec.n_particles()
        ));
    }
    if m.beads != config.sampler.beads {
        problems.push(format!("beads {} vs {}", m.beads, config.sampler.beads));
    }
    if m.temperature != config.sampler.temperature {
        problems.push(format!(
            "temperature {} vs {}",
            m.temperature, config.sampler.temperature
        ));
    }
    if m.alpha != spec.alpha() || m.beta != spec.beta() {
        problems.push(format!(
            "(alpha, beta) ({}, {}) vs ({}, {})",
            m.alpha,
            m.beta,
            spec.alpha(),
            spec.beta()
        ));
    }
    if !problems.is_empty() {
        return Err(CliError::Validation(format!(
            "archive does not match config: {}",
            problems.join("; ")
        )));
    }
    if set.is_empty() {
        return Err(CliError::Validation("archive holds no snapshots".into()));
    }
    Ok(())
}

pub fn load_archive(path: &Path) -> Result<SampleSet, CliError> {
    let f = File::open(path)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", path.display())))?;
    Ok(read_archive(BufReader::new(f))?)
}

fn truncated(set: &SampleSet, max: Option<usize>) -> SampleSet {
    let mut s = set.clone();
    if let Some(m) = max {
        if m < s.len() {
            s.snapshots.truncate(m);
            s.energy.truncate(m);
            s.kinetic_temperature.truncate(m);
            s.replica_lengths = vec![m];
        }
    }
    s
}

fn slug(o: &Observable) -> String {
    match o {
        Observable::Linear(_) => "linear".into(),
        other => other.to_string().replace('^', "pow"),
    }
}

fn exact_kubo(ensemble: &HarmonicEnsemble, o: &Observable, t: f64) -> Option<f64> {
    match o {
        Observable::Position(j) => ensemble.kubo_position(*j, *j, t).ok(),
        Observable::Mode(j) => ensemble.kubo_mode(*j, *j, t).ok(),
        Observable::Linear(c) => {
            let n = c.len();
            let mut s = 0.0;
            for a in 1..=n {
                for b in 1..=n {
                    s += c[a - 1] * c[b - 1] * ensemble.kubo_position(a, b, t).ok()?;
                }
            }
            Some(s)
        }
        Observable::Power { .. } => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesSummary {
    pub observable: String,
    pub file: String,
    /// Largest `|K − K_exact|/s.e.` when the chain is harmonic.
    pub max_z_exact: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZetaSummary {
    pub particle: usize,
    pub zeta: ZetaSet,
    pub zeta2_monte_carlo: Estimate,
    pub harmonic: Option<[f64; 4]>,
    pub horizon: f64,
    pub file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelateSummary {
    pub config: RunConfig,
    pub meta: SampleMeta,
    pub initial_conditions: usize,
    pub rpmd_dt: f64,
    pub series: Vec<SeriesSummary>,
    pub zeta: ZetaSummary,
    pub warnings: Vec<String>,
}

fn harmonic_ensemble(
    config: &RunConfig,
    regime: Regime,
) -> Result<Option<HarmonicEnsemble>, CliError> {
    let spec = config.chain_spec()?;
    if !spec.is_harmonic() {
        return Ok(None);
    }
    Ok(Some(HarmonicEnsemble::new(
        spec.n_particles(),
        config.sampler.temperature,
        regime,
    )?))
}

/// Kubo autocorrelations and ζ coefficients from an archive.
pub fn correlate(config: &RunConfig, archive: &Path) -> Result<CorrelateSummary, CliError> {
    let full = load_archive(archive)?;
    check_archive(config, &full)?;
    let set = truncated(&full, config.rpmd.max_initial);
    let observables = config.observables()?;
    let times = linspace(0.0, config.rpmd.t_max, config.rpmd.points);
    let rpmd_dt = config
        .rpmd
        .dt
        .unwrap_or_else(|| default_rpmd_dt(set.beads(), set.meta.temperature));
    let kubo = KuboConfig {
        dt: rpmd_dt,
        seed: config.sampler.seed,
    };
    let series = kubo_autocorrelation(&set, &observables, &times, kubo)?;
    let ensemble = harmonic_ensemble(config, Regime::Quantum)?;
    let mut out = OutputDir::create(&config.output.dir)?;
    let mut summaries = Vec::new();
    for (i, (o, s)) in observables.iter().zip(&series).enumerate() {
        let name = format!("kubo_{}_{}.csv", i + 1, slug(o));
        let exact: Option<Vec<f64>> = ensemble
            .as_ref()
            .and_then(|e| times.iter().map(|&t| exact_kubo(e, o, t)).collect());
        let mut header: Vec<String> = ["t", "K", "K_stderr"].map(String::from).to_vec();
        if exact.is_some() {
            header.push("K_exact".into());
        }
        let rows = (0..times.len()).map(|k| {
            let mut r = vec![times[k], s.values[k], s.stderr[k]];
            if let Some(e) = &exact {
                r.push(e[k]);
            }
            r
        });
        out.write_table(&name, &header, rows)?;
        let max_z_exact = exact.map(|e| {
            (0..times.len())
                .map(|k| s.estimate(k).z_score(e[k]))
                .fold(0.0, f64::max)
        });
        summaries.push(SeriesSummary {
            observable: o.to_string(),
            file: name,
            max_z_exact,
        });
    }
    let zp = config.zeta_particle();
    let zeta = zeta_coefficients(&full, zp)?;
    let harmonic = ensemble.as_ref().map(|e| e.zeta(zp)).transpose()?;
    let horizon = validity_horizon(
        config.oracle.epsilon,
        &ModeBasis::new(config.chain.n_particles),
    )?;
    let t6_file = format!("t6_q{zp}.csv");
    let means = zeta.means();
    out.write_table(
        &t6_file,
        &["t".into(), "T6".into()],
        times.iter().map(|&t| vec![t, t6_expansion(&means, t)]),
    )?;
    let mut warnings = Vec::new();
    if let Some(w) = anharmonicity_warning(&config.chain_spec()?) {
        warnings.push(w);
    }
    let summary = CorrelateSummary {
        config: config.clone(),
        meta: full.meta.clone(),
        initial_conditions: set.len(),
        rpmd_dt,
        series: summaries,
        zeta: ZetaSummary {
            particle: zp,
            zeta,
            zeta2_monte_carlo: zeta2_monte_carlo(&full, zp, config.sampler.seed)?,
            harmonic,
            horizon,
            file: t6_file,
        },
        warnings,
    };
    out.write_json("correlate.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub config: RunConfig,
    pub regime: Regime,
    pub horizon: f64,
    pub epsilon: f64,
    pub files: Vec<String>,
}

/// Analytic curves on the configured grids.
pub fn oracle(config: &RunConfig) -> Result<OracleSummary, CliError> {
    let n = config.chain.n_particles;
    let t = config.sampler.temperature;
    let o = &config.oracle;
    let basis = ModeBasis::new(n);
    let classical = HarmonicEnsemble::new(n, t, Regime::Classical)?;
    let quantum = HarmonicEnsemble::new(n, t, Regime::Quantum)?;
    let chosen = HarmonicEnsemble::new(n, t, o.regime)?;
    let mut out = OutputDir::create(&config.output.dir)?;
    let idx: Vec<usize> = (1..=n).collect();

    let mut rows = Vec::new();
    for &j in &idx {
        let w = basis.frequency(j);
        rows.push(vec![
            j as f64,
            w,
            classical.mode_variance(j)?,
            quantum.mode_variance(j)?,
            1.0 / (2.0 * w),
            classical.position_variance(j)?,
            quantum.position_variance(j)?,
        ]);
    }
    let header = [
        "j",
        "omega",
        "mode_classical",
        "mode_quantum",
        "mode_ground",
        "position_classical",
        "position_quantum",
    ];
    out.write_table("variances.csv", &header.map(String::from), rows)?;

    let grid = linspace(o.q_min, o.q_max, o.q_points);
    let mut header = vec!["q".to_string()];
    header.extend(idx.iter().map(|j| format!("Q{j}")));
    let rows = grid
        .iter()
        .map(|&q| {
            let mut r = vec![q];
            for &j in &idx {
                r.push(chosen.position_density(&[q], &[j])?);
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    out.write_table("position_density.csv", &header, rows)?;

    let mut header = vec!["eta".to_string()];
    header.extend(idx.iter().map(|j| format!("eta{j}")));
    let rows = grid
        .iter()
        .map(|&x| {
            let mut r = vec![x];
            for &j in &idx {
                r.push(chosen.mode_density(&[x], &[j])?);
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    out.write_table("mode_density.csv", &header, rows)?;

    let times = linspace(0.0, o.t_max, o.t_points);
    let mut header = vec!["t".to_string()];
    header.extend(idx.iter().map(|j| format!("K_eta{j}")));
    header.extend(idx.iter().map(|j| format!("K_q{j}")));
    let rows = times
        .iter()
        .map(|&s| {
            let mut r = vec![s];
            for &j in &idx {
                r.push(chosen.kubo_mode(j, j, s)?);
            }
            for &j in &idx {
                r.push(chosen.kubo_position(j, j, s)?);
            }
            Ok(r)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    out.write_table("kubo.csv", &header, rows)?;

    let beads = config.sampler.beads;
    let mut rows = Vec::new();
    for &j in &idx {
        for k in 1..=beads {
            rows.push(vec![
                j as f64,
                k as f64,
                rp_normal_frequency(&basis, j, k, t, beads)?,
            ]);
        }
    }
    out.write_table(
        "rp_frequencies.csv",
        &["j", "k", "Omega"].map(String::from),
        rows,
    )?;

    let mut rows = Vec::new();
    for &j in &idx {
        let z = chosen.zeta(j)?;
        rows.push(vec![j as f64, z[0], z[1], z[2], z[3]]);
    }
    out.write_table(
        "zeta_harmonic.csv",
        &["j", "zeta0", "zeta2", "zeta4", "zeta6"].map(String::from),
        rows,
    )?;

    if config.chain.alpha > 0.0 {
        let alpha = config.chain.alpha;
        let rows = config
            .quartic_temperatures()
            .iter()
            .map(|&temp| {
                Ok(vec![
                    temp,
                    quartic_site_partition(temp, alpha)?,
                    quartic_site_moment(temp, alpha)?,
                ])
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        out.write_table("quartic_site.csv", &["T", "Z", "f"].map(String::from), rows)?;
    }

    let mut summary = OracleSummary {
        config: config.clone(),
        regime: o.regime,
        horizon: validity_horizon(o.epsilon, &basis)?,
        epsilon: o.epsilon,
        files: out.written().iter().map(|p| file_name(p)).collect(),
    };
    summary.files.push("oracle.json".into());
    out.write_json("oracle.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub particle: usize,
    pub mean: Estimate,
    pub second: Estimate,
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeRow {
    pub mode: usize,
    pub sampled: Estimate,
    pub oracle: f64,
    pub relative_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub dir: PathBuf,
    pub label: String,
    pub temperature: f64,
    pub beads: usize,
    pub alpha: f64,
    pub n_samples: usize,
    pub drift: DriftSummary,
    pub equipartition: Equipartition,
    pub moments: Vec<MomentRow>,
    pub modes: Vec<ModeRow>,
    pub symmetry: SymmetryReport,
    pub replicas: Vec<KsComparison>,
    pub zeta_particle: usize,
    pub zeta: ZetaSet,
    pub zeta2_monte_carlo: Estimate,
    /// Single-site reference `f(T)` for the sampled `⟨q_j²⟩`.
    pub quartic_reference: Option<f64>,
    pub kubo_max_z: Option<f64>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub temperature: f64,
    pub alpha: f64,
    pub beads: (usize, usize),
    pub particle: usize,
    pub variances: (Estimate, Estimate),
    /// `(v_b − v_a)/√(s_a² + s_b²)`.
    pub separation: f64,
    pub ks: KsComparison,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub runs: Vec<RunReport>,
    pub comparisons: Vec<Comparison>,
    pub passed: bool,
}

fn analyse_run(
    dir: &Path,
    out: &mut OutputDir,
    index: usize,
) -> Result<(RunReport, SampleSet), CliError> {
    let config = RunConfig::load(&dir.join(CONFIG_FILE))?;
    let set = load_archive(&dir.join(ARCHIVE_FILE))?;
    check_archive(&config, &set)?;
    let spec = config.chain_spec()?;
    let n = spec.n_particles();
    let (t, beads) = (set.meta.temperature, set.beads());
    let label = format!("run{}_T{}_P{}_a{}", index + 1, t, beads, spec.alpha());
    let level = config.estimators.level;
    let mut checks = Vec::new();
    let first_file = out.written().len();

    let drift = drift_summary(&set, config.sampler.drift_tolerance);
    checks.push(check(
        "energy conservation",
        drift.passed,
        format!(
            "max relative drift {:e} < {:e}",
            drift.max_relative, drift.tolerance
        ),
    ));
    let equip = equipartition(&set);
    checks.push(check(
        "equipartition",
        equip.passed,
        format!(
            "kinetic temperature {:.6} ± {:.6} vs {t}",
            equip.estimate.mean, equip.estimate.stderr
        ),
    ));

    let quantum = HarmonicEnsemble::new(n, t, Regime::Quantum)?;
    let classical = HarmonicEnsemble::new(n, t, Regime::Classical)?;
    let reference = if beads == 1 { &classical } else { &quantum };
    let harmonic = spec.is_harmonic();
    let mut moments = Vec::new();
    for j in 1..=n {
        moments.push(MomentRow {
            particle: j,
            mean: sample_moment(&set, &[j], &[1])?,
            second: sample_moment(&set, &[j], &[2])?,
            oracle: if harmonic {
                Some(reference.position_variance(j)?)
            } else {
                None
            },
        });
    }
    let basis = ModeBasis::new(n);
    let mut modes = Vec::new();
    if harmonic {
        for j in 1..=n {
            let sampled = batch_means(
                &set.bead_averaged(|q| basis.mode(j, q).powi(2)),
                DEFAULT_BATCHES,
            );
            let oracle = reference.mode_variance(j)?;
            modes.push(ModeRow {
                mode: j,
                relative_error: (sampled.mean - oracle) / oracle,
                z: sampled.z_score(oracle),
                sampled,
                oracle,
            });
        }
        let worst = modes.iter().map(|m| m.z).fold(0.0, f64::max);
        let worst_rel = modes
            .iter()
            .map(|m| m.relative_error.abs())
            .fold(0.0, f64::max);
        let passed = if beads == 1 {
            worst < 3.0
        } else {
            worst_rel < 0.05
        };
        checks.push(check(
            "harmonic mode variances",
            passed,
            format!("max z {worst:.2}, max relative error {worst_rel:.4}"),
        ));
    }

    let half: Vec<usize> = (1..=n.div_ceil(2)).collect();
    let symmetry = symmetry_diagnostic(&set, &half, level)?;
    checks.push(check(
        "mirror symmetry",
        symmetry.passed(),
        format!(
            "{} KS comparisons at level {level}",
            symmetry.comparisons.len()
        ),
    ));
    let mut replicas = Vec::new();
    if beads > 1 {
        for j in 1..=n {
            replicas.push(replica_equivalence(&set, j, level)?);
        }
        checks.push(check(
            "replica equivalence",
            replicas.iter().all(|r| r.passed),
            format!("pairwise bead KS for {n} particles"),
        ));
    }

    for j in config.force_particles() {
        let section = force_sections(&set, j, BeadSelect::Bead(1))?;
        let z = section.mean_force.z_score(0.0);
        checks.push(check(
            format!("force balance q{j}"),
            z < 3.0,
            format!(
                "<F> = {:.3e} ± {:.3e}",
                section.mean_force.mean, section.mean_force.stderr
            ),
        ));
        let name = format!("{label}_force_q{j}.csv");
        let env = section.envelope;
        let rows = section
            .positions
            .iter()
            .zip(&section.forces)
            .map(|(&q, &f)| {
                let mut r = vec![q, f];
                if let Some(e) = env {
                    r.push(e.force(q));
                }
                r
            });
        let mut header = vec!["q".to_string(), "F".to_string()];
        if env.is_some() {
            header.push("envelope".into());
        }
        out.write_table(&name, &header, rows)?;
    }

    let binning = match config.estimators.bins {
        Some(b) => Binning::Uniform(b),
        None => Binning::Auto,
    };
    let kappa = linspace(
        -config.estimators.kappa_max,
        config.estimators.kappa_max,
        config.estimators.kappa_points,
    );
    for subset in config.particle_subsets() {
        let dist = estimate_distribution(&set, &subset, &binning)?;
        let tag: Vec<String> = subset.iter().map(|j| format!("q{j}")).collect();
        let tag = tag.join("_");
        out.write_with(&format!("{label}_dist_{tag}.csv"), |w| {
            Ok(dist.write_csv(w)?)
        })?;
        if subset.len() == 1 {
            let ks: Vec<Vec<f64>> = kappa.iter().map(|&k| vec![k]).collect();
            let s = structure_factor(&dist, &ks)?;
            out.write_with(&format!("{label}_sf_{tag}.csv"), |w| {
                Ok(qfpu::estimators::write_structure_factor_csv(&ks, &s, w)?)
            })?;
            if subset[0] == 1 {
                let centers = dist.centers(0);
                let wall = wall_distribution(&centers, t, &spec)?;
                out.write_table(
                    &format!("{label}_wall_q1.csv"),
                    &["q", "sampled", "wall"].map(String::from),
                    centers
                        .iter()
                        .zip(&dist.density)
                        .zip(&wall)
                        .map(|((&q, &d), &w)| vec![q, d, w]),
                )?;
            }
        }
    }

    let zp = config.zeta_particle();
    let zeta = zeta_coefficients(&set, zp)?;
    let zeta2 = zeta2_monte_carlo(&set, zp, config.sampler.seed)?;
    checks.push(check(
        "zeta2 identity",
        zeta2.z_score(t) < 3.0,
        format!("<p^2> = {:.6} ± {:.6} vs T = {t}", zeta2.mean, zeta2.stderr),
    ));
    let quartic_reference = if spec.alpha() > 0.0 {
        Some(quartic_site_moment(t, spec.alpha())?)
    } else {
        None
    };

    let correlate = dir.join("correlate.json");
    let mut kubo_max_z = None;
    if correlate.exists() {
        let v = read_json(&correlate)?;
        let zs: Vec<f64> = v["series"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|s| s["max_z_exact"].as_f64())
            .collect();
        if !zs.is_empty() {
            let worst = zs.iter().copied().fold(0.0, f64::max);
            kubo_max_z = Some(worst);
            checks.push(check(
                "harmonic Kubo overlay",
                worst < 3.0,
                format!("max |K − K_exact|/s.e. = {worst:.2}"),
            ));
        }
    }

    let files = out.written()[first_file..]
        .iter()
        .map(|p| file_name(p))
        .collect();
    Ok((
        RunReport {
            dir: dir.to_path_buf(),
            label,
            temperature: t,
            beads,
            alpha: spec.alpha(),
            n_samples: set.len(),
            drift,
            equipartition: equip,
            moments,
            modes,
            symmetry,
            replicas,
            zeta_particle: zp,
            zeta,
            zeta2_monte_carlo: zeta2,
            quartic_reference,
            kubo_max_z,
            checks,
            files,
        },
        set,
    ))
}

fn markdown(report: &Report) -> String {
    let mut s = String::from("# qfpu report\n\n## Runs\n\n");
    s.push_str("| run | T | P | alpha | samples | checks |\n|---|---|---|---|---|---|\n");
    for r in &report.runs {
        let ok = r.checks.iter().filter(|c| c.passed).count();
        s.push_str(&format!(
            "| {} | {} | {} | {} | {} | {ok}/{} |\n",
            r.label,
            r.temperature,
            r.beads,
            r.alpha,
            r.n_samples,
            r.checks.len()
        ));
    }
    for r in &report.runs {
        s.push_str(&format!("\n## {}\n\n", r.label));
        for c in &r.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            s.push_str(&format!("- {tag} {}: {}\n", c.name, c.detail));
        }
        s.push_str("\n| j | <q_j^2> | s.e. | oracle |\n|---|---|---|---|\n");
        for m in &r.moments {
            let o = m.oracle.map_or("".into(), |x| format!("{x:.6}"));
            s.push_str(&format!(
                "| {} | {:.6} | {:.6} | {o} |\n",
                m.particle, m.second.mean, m.second.stderr
            ));
        }
        let z = &r.zeta;
        s.push_str(&format!(
            "\nzeta coefficients of q{}: zeta0 = {:.6} ± {:.6}, zeta2 = {}, zeta4 = {:.6} ± {:.6}, zeta6 = {:.6} ± {:.6}\n",
            r.zeta_particle, z.zeta0.mean, z.zeta0.stderr, z.zeta2.mean, z.zeta4.mean, z.zeta4.stderr, z.zeta6.mean, z.zeta6.stderr
        ));
        if let Some(f) = r.quartic_reference {
            s.push_str(&format!("\nsingle-site reference f(T) = {f:.6}\n"));
        }
    }
    if !report.comparisons.is_empty() {
        s.push_str("\n## Quantum against classical\n\n| T | alpha | P | q_j | variances | separation | KS D / critical |\n|---|---|---|---|---|---|---|\n");
        for c in &report.comparisons {
            s.push_str(&format!(
                "| {} | {} | {} vs {} | q{} | {:.6} vs {:.6} | {:.2} | {:.4} / {:.4} |\n",
                c.temperature,
                c.alpha,
                c.beads.0,
                c.beads.1,
                c.particle,
                c.variances.0.mean,
                c.variances.1.mean,
                c.separation,
                c.ks.statistic,
                c.ks.critical
            ));
        }
    }
    s.push_str(&format!(
        "\nOverall: {}\n",
        if report.passed { "PASS" } else { "FAIL" }
    ));
    s
}

/// Analyse one or more run directories; with `strict`, failing checks turn
/// into an error after the report is written.
pub fn report(dirs: &[PathBuf], out_dir: &Path, strict: bool) -> Result<Report, CliError> {
    if dirs.is_empty() {
        return Err(CliError::Validation(
            "report needs at least one run directory".into(),
        ));
    }
    let mut out = OutputDir::create(out_dir)?;
    let mut runs = Vec::new();
    let mut sets = Vec::new();
    for (i, d) in dirs.iter().enumerate() {
        let (r, s) = analyse_run(d, &mut out, i)?;
        runs.push(r);
        sets.push(s);
    }

    let mut comparisons = Vec::new();
    for a in 0..runs.len() {
        for b in a + 1..runs.len() {
            let (ra, rb) = (&runs[a], &runs[b]);
            let same = ra.temperature == rb.temperature
                && ra.alpha == rb.alpha
                && sets[a].n_particles() == sets[b].n_particles()
                && ra.zeta_particle == rb.zeta_particle
                && ra.beads != rb.beads;
            if !same {
                continue;
            }
            let (lo, hi) = if ra.beads < rb.beads { (a, b) } else { (b, a) };
            let j = runs[lo].zeta_particle;
            let va = runs[lo].moments[j - 1].second;
            let vb = runs[hi].moments[j - 1].second;
            comparisons.push(Comparison {
                temperature: ra.temperature,
                alpha: ra.alpha,
                beads: (runs[lo].beads, runs[hi].beads),
                particle: j,
                variances: (va, vb),
                separation: (vb.mean - va.mean) / va.stderr.hypot(vb.stderr),
                ks: compare_sets(&sets[lo], &sets[hi], j, 0.01)?,
            });
        }
    }

    let mut header = vec!["t".to_string()];
    header.extend(runs.iter().map(|r| r.label.clone()));
    let t_max = sets
        .iter()
        .map(|s| validity_horizon(0.1, &ModeBasis::new(s.n_particles())))
        .collect::<Result<Vec<f64>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let times = linspace(0.0, 1.5 * t_max, 61);
    out.write_table(
        "t6_curves.csv",
        &header,
        times.iter().map(|&t| {
            let mut row = vec![t];
            row.extend(runs.iter().map(|r| t6_expansion(&r.zeta.means(), t)));
            row
        }),
    )?;
    let zeta_header = [
        "T", "P", "alpha", "zeta0", "zeta0_se", "zeta2", "zeta4", "zeta4_se", "zeta6", "zeta6_se",
    ];
    out.write_table(
        "zeta_table.csv",
        &zeta_header.map(String::from),
        runs.iter().map(|r| {
            let z = &r.zeta;
            vec![
                r.temperature,
                r.beads as f64,
                r.alpha,
                z.zeta0.mean,
                z.zeta0.stderr,
                z.zeta2.mean,
                z.zeta4.mean,
                z.zeta4.stderr,
                z.zeta6.mean,
                z.zeta6.stderr,
            ]
        }),
    )?;
    out.write_table(
        "variance_table.csv",
        &[
            "T",
            "P",
            "alpha",
            "particle",
            "variance",
            "variance_se",
            "f_T",
        ]
        .map(String::from),
        runs.iter().map(|r| {
            let m = &r.moments[r.zeta_particle - 1];
            vec![
                r.temperature,
                r.beads as f64,
                r.alpha,
                r.zeta_particle as f64,
                m.second.mean,
                m.second.stderr,
                r.quartic_reference.unwrap_or(f64::NAN),
            ]
        }),
    )?;

    let passed = runs.iter().all(|r| r.checks.iter().all(|c| c.passed));
    let report = Report {
        runs,
        comparisons,
        passed,
    };
    out.write_text("report.md", &markdown(&report))?;
    out.write_json("report.json", &report)?;
    if strict && !passed {
        let failed: Vec<String> = report
            .runs
            .iter()
            .flat_map(|r| {
                r.checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(move |c| format!("{}: {}", r.label, c.name))
            })
            .collect();
        return Err(CliError::Acceptance(failed.join(", ")));
    }
    Ok(report)
}
