use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpe_spectra::qpe::plan_resolution;
use qpe_spectra_cli::experiment::{compile, resolve_qpe};
use qpe_spectra_cli::{run_experiment, run_oracle, run_prep_study, validate_config, validate_study_config, CliError, ExperimentConfig, StudyConfig};

#[derive(Parser)]
#[command(name = "qpe-spectra", version, about = "Sample spectral functions with simulated phase estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: prep, phase estimation, sampling, oracle comparison.
    Run(Common),
    /// Acceptance probability and fidelity over a φ grid for synthetic observables.
    Prepstudy(Common),
    /// Reference spectra and outcome distribution only.
    Oracle(Common),
    /// Register size and coupling time for a bandwidth and linewidth.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "gamma")]
        omega_max: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config", "this subcommand needs a config file"))?;
    let mut config = validate_config(&read(path)?)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(common) => {
            let config = load(&common)?;
            let report = run_experiment(&config)?;
            println!(
                "wrote {}: l={} delta={} TV(exact, oracle)={:.3e}{}",
                config.output_dir.display(),
                report.qpe.l,
                report.qpe.delta,
                report.distances.exact_vs_oracle.total_variation,
                report
                    .distances
                    .empirical_vs_exact
                    .map(|d| format!(" TV(empirical, exact)={:.3e}", d.total_variation))
                    .unwrap_or_default()
            );
        }
        Command::Prepstudy(common) => {
            let mut study = match &common.config {
                Some(path) => validate_study_config(&read(path)?)?,
                None => StudyConfig::default(),
            };
            if let Some(seed) = common.seed {
                study.seed = seed;
            }
            if let Some(out) = common.out {
                study.output_dir = out;
            }
            let rows = run_prep_study(&study.prepstudy, study.seed, &study.output_dir)?;
            println!("wrote {} rows to {}", rows.len(), study.output_dir.join("prepstudy.csv").display());
        }
        Command::Oracle(common) => {
            let config = load(&common)?;
            let report = run_oracle(&config)?;
            println!(
                "wrote {}: l={} delta={} gamma={}",
                config.output_dir.display(),
                report.qpe.l,
                report.qpe.delta,
                report.spectrum.gamma
            );
        }
        Command::Plan { common, omega_max, gamma } => {
            if let Some(gamma) = gamma {
                let omega_max = match omega_max {
                    Some(w) => w,
                    None => {
                        let config = load(&common)?;
                        2.0 * qpe_spectra_cli::experiment::spectral_width(&compile(&config)?.eig)
                    }
                };
                print_json(&plan_resolution(omega_max, gamma)?);
            } else {
                let config = load(&common)?;
                print_json(&resolve_qpe(&config.qpe, &compile(&config)?.eig)?);
            }
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
