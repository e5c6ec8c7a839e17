use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use qpe_spectra::io::fmt_f64;
use qpe_spectra::models::synthetic_eigenvalues;
use qpe_spectra::oracle::{outcome_distribution_from, spectral_from, GoldenRuleWeights};
use qpe_spectra::purify::operator_state_on;
use qpe_spectra::qpe::{plan_resolution, run_qpe_with, sample_outcomes};
use qpe_spectra::seed::{self, Stream};
use qpe_spectra::stateprep::{choose_phi, run_prep_circuit, write_prep_study_csv, PrepStudyRow, SpectralMeasure};
use qpe_spectra::{
    build_operator, distribution_distance, eig_hermitian, golden_rule_weights, BaseState, DistanceMetric, EigenDecomposition,
    HermitianOperator, PhaseDistribution, ResolutionPlan, SpectrumTable, StateVector, TransitionData, QUBIT_CAP,
};

use crate::config::{ExperimentConfig, PrepMode, PrepStudyConfig, QpeConfig};
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Register size and coupling time actually used, with the plan when the
/// resolution was derived from (γ, ω_max).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedQpe {
    pub l: u32,
    pub delta: f64,
    pub auto_plan: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<ResolutionPlan>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepStats {
    pub mode: PrepMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// Closed-form acceptance probability of the prep circuit.
    #[serde(rename = "P1", default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_acceptance: Option<f64>,
    /// Fidelity of the state handed to phase estimation with |O⟩.
    #[serde(rename = "F")]
    pub fidelity: f64,
    pub attempts: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_acceptance_rate: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistancePair {
    pub total_variation: f64,
    pub max_abs: f64,
}

impl DistancePair {
    fn between(p: &[f64], q: &[f64]) -> Result<Self> {
        Ok(Self {
            total_variation: distribution_distance(p, q, DistanceMetric::TotalVariation)?,
            max_abs: distribution_distance(p, q, DistanceMetric::MaxAbs)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    /// Simulated circuit vs the exact-diagonalization outcome distribution.
    pub exact_vs_oracle: DistancePair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical_vs_exact: Option<DistancePair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub seed: u64,
    pub sampling_seed: u64,
    pub num_sites: usize,
    pub peak_qubits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_degeneracy: Option<usize>,
    pub timings_ms: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: serde_json::Value,
    pub qpe: ResolvedQpe,
    pub exact_distribution: PhaseDistribution,
    pub oracle_distribution: PhaseDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical_distribution: Option<PhaseDistribution>,
    pub spectrum: SpectrumTable,
    pub prep_stats: PrepStats,
    pub distances: Distances,
    pub metadata: Metadata,
}

struct Timer {
    timings: BTreeMap<String, f64>,
    last: Instant,
}

impl Timer {
    fn new() -> Self {
        Self {
            timings: BTreeMap::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.timings.insert(name.to_string(), (now - self.last).as_secs_f64() * 1e3);
        self.last = now;
    }
}

/// Hamiltonian and observable compiled from a config, with H diagonalized.
pub struct Compiled {
    pub h: HermitianOperator,
    pub o: HermitianOperator,
    pub eig: EigenDecomposition,
}

pub fn compile(config: &ExperimentConfig) -> Result<Compiled> {
    let h = build_operator(&config.model_spec())?;
    let o = build_operator(&config.observable_spec())?;
    let eig = eig_hermitian(&h)?;
    Ok(Compiled { h, o, eig })
}

/// Largest |ε_n - ε_m| of H.
pub fn spectral_width(eig: &EigenDecomposition) -> f64 {
    eig.eigenvalues.last().unwrap_or(&0.0) - eig.eigenvalues.first().unwrap_or(&0.0)
}

pub fn resolve_qpe(qpe: &QpeConfig, eig: &EigenDecomposition) -> Result<ResolvedQpe> {
    match *qpe {
        QpeConfig::Explicit { l, delta } => Ok(ResolvedQpe {
            l,
            delta,
            auto_plan: false,
            plan: None,
        }),
        QpeConfig::AutoPlan { gamma, omega_max, .. } => {
            let omega_max = omega_max.unwrap_or(2.0 * spectral_width(eig));
            let plan = plan_resolution(omega_max, gamma)?;
            Ok(ResolvedQpe {
                l: plan.l,
                delta: plan.delta,
                auto_plan: true,
                plan: Some(plan),
            })
        }
    }
}

fn check_qubits(requested: usize) -> Result<()> {
    if requested > QUBIT_CAP {
        return Err(CliError::ResourceCap(qpe_spectra::Error::QubitCapExceeded {
            requested,
            cap: QUBIT_CAP,
        }));
    }
    Ok(())
}

fn spectrum_grid(config: &ExperimentConfig, qpe: &ResolvedQpe) -> (Vec<f64>, f64) {
    let size = (1u64 << qpe.l) as f64;
    let gamma = config.spectrum.gamma.unwrap_or(2.0 * PI / (qpe.delta * size));
    let omega_max = config.spectrum.omega_max.unwrap_or(PI / qpe.delta);
    let points = config.spectrum.points.unwrap_or(4 * (1usize << qpe.l) + 1);
    let step = 2.0 * omega_max / (points - 1) as f64;
    let grid = (0..points).map(|k| -omega_max + step * k as f64).collect();
    (grid, gamma)
}

fn prepare(
    config: &ExperimentConfig,
    o: &HermitianOperator,
    base: &BaseState,
    warnings: &mut Vec<String>,
) -> Result<(StateVector, PrepStats)> {
    let target = operator_state_on(o, base)?;
    match config.prep.mode {
        PrepMode::Exact => Ok((
            target,
            PrepStats {
                mode: PrepMode::Exact,
                phi: None,
                p1: None,
                predicted_acceptance: None,
                fidelity: 1.0,
                attempts: 0,
                observed_acceptance_rate: None,
            },
        )),
        PrepMode::Circuit => {
            let choice = choose_phi(o, config.prep.epsilon, base)?;
            for attempt in 0..config.prep.max_attempts {
                let run = run_prep_circuit(o, choice.phi, base, seed::derive(config.seed, Stream::Prep, attempt))?;
                if let Some(state) = run.post_state {
                    for w in run.warnings {
                        if !warnings.contains(&w) {
                            warnings.push(w);
                        }
                    }
                    let attempts = attempt + 1;
                    return Ok((
                        state,
                        PrepStats {
                            mode: PrepMode::Circuit,
                            phi: Some(choice.phi),
                            p1: Some(run.acceptance_probability),
                            predicted_acceptance: Some(choice.predicted_acceptance),
                            fidelity: run.fidelity_with_target,
                            attempts,
                            observed_acceptance_rate: Some(1.0 / attempts as f64),
                        },
                    ));
                }
            }
            Err(CliError::PrepExhausted {
                attempts: config.prep.max_attempts,
                predicted: choice.predicted_acceptance,
            })
        }
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

fn export_err(e: csv::Error) -> CliError {
    CliError::Core(qpe_spectra::Error::Export(e.to_string()))
}

/// CSV with columns f, omega, p_exact, p_oracle, p_empirical (empty when no
/// shots were taken).
pub fn distributions_csv(
    exact: &PhaseDistribution,
    oracle: &PhaseDistribution,
    empirical: Option<&PhaseDistribution>,
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["f", "omega", "p_exact", "p_oracle", "p_empirical"]).map_err(export_err)?;
    for (f, omega) in exact.frequencies().into_iter().enumerate() {
        let empirical = empirical.map(|d| fmt_f64(d.probabilities[f])).unwrap_or_default();
        w.write_record([
            f.to_string(),
            fmt_f64(omega),
            fmt_f64(exact.probabilities[f]),
            fmt_f64(oracle.probabilities[f]),
            empirical,
        ])
        .map_err(export_err)?;
    }
    w.into_inner().map_err(|e| CliError::Core(qpe_spectra::Error::Export(e.to_string())))
}

fn spectrum_csv(table: &SpectrumTable) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    table.write_csv(&mut out)?;
    Ok(out)
}

/// Full pipeline: compile, prepare, simulate phase estimation, sample,
/// compare with the oracle and write distributions.csv, spectrum.csv and
/// report.json into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut timer = Timer::new();
    let n = config.model_spec().n;
    let prep_qubits = if config.prep.mode == PrepMode::Circuit { 2 * n + 1 } else { 2 * n };
    // explicit registers can be rejected before diagonalizing
    if let QpeConfig::Explicit { l, .. } = config.qpe {
        check_qubits(prep_qubits.max(2 * n + l as usize))?;
    }
    let compiled = compile(config)?;
    timer.lap("compile");

    let qpe = resolve_qpe(&config.qpe, &compiled.eig)?;
    let peak_qubits = prep_qubits.max(2 * n + qpe.l as usize);
    check_qubits(peak_qubits)?;

    let mut warnings = Vec::new();
    let base = BaseState::from_eigen(&compiled.eig, config.ensemble)?;
    let (prepared, prep_stats) = prepare(config, &compiled.o, &base, &mut warnings)?;
    timer.lap("prepare");

    let exact = run_qpe_with(&prepared, &compiled.eig, qpe.l, qpe.delta)?;
    timer.lap("qpe");

    let sampling_seed = seed::derive(config.seed, Stream::Sampling, 0);
    let empirical = match config.shots {
        0 => None,
        shots => Some(sample_outcomes(&exact, shots, sampling_seed)?),
    };
    timer.lap("sampling");

    let data = TransitionData::from_eigen(compiled.eig.clone(), &compiled.o, config.ensemble)?;
    let oracle = outcome_distribution_from(&data, qpe.l, qpe.delta)?;
    let (grid, gamma) = spectrum_grid(config, &qpe);
    let spectrum = spectral_from(&data, &grid, gamma)?;
    timer.lap("oracle");

    let distances = Distances {
        exact_vs_oracle: DistancePair::between(&exact.probabilities, &oracle.probabilities)?,
        empirical_vs_exact: empirical
            .as_ref()
            .map(|e| DistancePair::between(&e.probabilities, &exact.probabilities))
            .transpose()?,
    };

    let dir = &config.output_dir;
    create_dir(dir)?;
    write_file(dir, "distributions.csv", &distributions_csv(&exact, &oracle, empirical.as_ref())?)?;
    write_file(dir, "spectrum.csv", &spectrum_csv(&spectrum)?)?;
    timer.lap("write");

    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        config: serde_json::to_value(config).expect("config serializes"),
        qpe,
        exact_distribution: exact,
        oracle_distribution: oracle,
        empirical_distribution: empirical,
        spectrum,
        prep_stats,
        distances,
        metadata: Metadata {
            version: qpe_spectra::VERSION.to_string(),
            seed: config.seed,
            sampling_seed,
            num_sites: n,
            peak_qubits,
            ground_degeneracy: base.ground_degeneracy,
            timings_ms: timer.timings,
            warnings,
        },
    };
    write_file(dir, "report.json", &to_json(&report))?;
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub schema_version: u32,
    pub config: serde_json::Value,
    pub qpe: ResolvedQpe,
    pub golden_rule: GoldenRuleWeights,
    pub oracle_distribution: PhaseDistribution,
    pub spectrum: SpectrumTable,
}

/// Reference quantities only: golden-rule weights, the exact outcome
/// distribution and Σ_γ(ω). Writes spectrum.csv, spectrum.json, oracle.csv
/// and oracle_report.json.
pub fn run_oracle(config: &ExperimentConfig) -> Result<OracleReport> {
    let compiled = compile(config)?;
    let qpe = resolve_qpe(&config.qpe, &compiled.eig)?;
    let golden_rule = golden_rule_weights(&compiled.h, &compiled.o)?;
    let data = TransitionData::from_eigen(compiled.eig, &compiled.o, config.ensemble)?;
    let oracle = outcome_distribution_from(&data, qpe.l, qpe.delta)?;
    let (grid, gamma) = spectrum_grid(config, &qpe);
    let spectrum = spectral_from(&data, &grid, gamma)?;

    let dir = &config.output_dir;
    create_dir(dir)?;
    write_file(dir, "spectrum.csv", &spectrum_csv(&spectrum)?)?;
    write_file(dir, "spectrum.json", &to_json(&spectrum))?;
    let mut csv = Vec::new();
    oracle.write_csv(&mut csv)?;
    write_file(dir, "oracle.csv", &csv)?;
    let report = OracleReport {
        schema_version: SCHEMA_VERSION,
        config: serde_json::to_value(config).expect("config serializes"),
        qpe,
        golden_rule,
        oracle_distribution: oracle,
        spectrum,
    };
    write_file(dir, "oracle_report.json", &to_json(&report))?;
    Ok(report)
}

/// Log-spaced grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
        .collect()
}

/// P₁(φ) and F(φ) for synthetic diagonal observables at infinite
/// temperature, where the spectral measure is uniform over the eigenvalues.
pub fn prep_study(study: &PrepStudyConfig, master_seed: u64) -> Result<Vec<PrepStudyRow>> {
    let phis = log_grid(study.phi_min, study.phi_max, study.points);
    let mut rows = Vec::new();
    for &kind in &study.distributions {
        let dist = qpe_spectra::EigenvalueDistribution::new(kind, study.parameter)?;
        for k in 0..study.seeds {
            let s = seed::derive(master_seed, Stream::Synthetic, k);
            let measure = SpectralMeasure::uniform(synthetic_eigenvalues(&dist, study.n, s)?);
            for &phi in &phis {
                rows.push(PrepStudyRow {
                    phi,
                    p1: measure.acceptance_probability(phi),
                    fidelity: measure.fidelity(phi)?,
                    distribution: kind.name().to_string(),
                    n: study.n,
                    seed: s,
                });
            }
        }
    }
    Ok(rows)
}

/// Runs [`prep_study`] and writes prepstudy.csv into `dir`.
pub fn run_prep_study(study: &PrepStudyConfig, master_seed: u64, dir: &Path) -> Result<Vec<PrepStudyRow>> {
    let rows = prep_study(study, master_seed)?;
    create_dir(dir)?;
    let mut out = Vec::new();
    write_prep_study_csv(&rows, &mut out)?;
    write_file(dir, "prepstudy.csv", &out)?;
    Ok(rows)
}
