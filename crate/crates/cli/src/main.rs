use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qfpu_cli::commands::{self, ARCHIVE_FILE};
use qfpu_cli::config::RunConfig;
use qfpu_cli::error::CliError;

#[derive(Parser)]
#[command(
    name = "qfpu",
    version,
    about = "Path-integral sampling of the quantum FPU chain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the ring polymer and write a snapshot archive.
    Sample {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kubo autocorrelations and short-time coefficients from an archive.
    Correlate {
        config: PathBuf,
        /// Defaults to the archive in the output directory.
        archive: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytic reference curves.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare one or more sampled runs against each other and the oracles.
    Report {
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 3 if any check fails.
        #[arg(long)]
        strict: bool,
    },
}

fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::load(path)?;
    if let Some(s) = seed {
        config.sampler.seed = s;
    }
    if let Some(o) = out {
        config.output.dir = o;
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sample { config, seed, out } => {
            let config = load(&config, seed, out)?;
            let s = commands::sample(&config)?;
            println!(
                "{} snapshots in {} (dt {}, burn {}, stride {}, drift {:e})",
                s.n_samples,
                config.output.dir.display(),
                s.meta.dt,
                s.meta.n_burn,
                s.meta.stride,
                s.drift.max_relative
            );
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Correlate {
            config,
            archive,
            seed,
            out,
        } => {
            let config = load(&config, seed, out)?;
            let archive = archive.unwrap_or_else(|| config.output.dir.join(ARCHIVE_FILE));
            let s = commands::correlate(&config, &archive)?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{} series from {} initial conditions in {}",
                s.series.len(),
                s.initial_conditions,
                config.output.dir.display()
            );
        }
        Command::Oracle { config, out } => {
            let config = load(&config, None, out)?;
            let s = commands::oracle(&config)?;
            println!("{} files in {}", s.files.len(), config.output.dir.display());
        }
        Command::Report { runs, out, strict } => {
            let out = out.unwrap_or_else(|| {
                if runs.len() == 1 {
                    runs[0].join("report")
                } else {
                    PathBuf::from("qfpu-report")
                }
            });
            let r = commands::report(&runs, &out, strict)?;
            println!(
                "{} in {}",
                if r.passed {
                    "all checks passed"
                } else {
                    "some checks failed"
                },
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
