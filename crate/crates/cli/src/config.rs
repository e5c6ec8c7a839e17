//! JSON experiment configuration.
//!
//! A minimal document names a model, an observable and the phase-estimation
//! resolution; everything else has a default:
//!
//! ```json
//! {
//!   "model": {"preset": "tilted_ising", "n": 3},
//!   "observable": "total_sz",
//!   "qpe": {"l": 6, "delta": 0.4}
//! }
//! ```

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use qpe_spectra::models::{
    heisenberg_spec, single_site_z_spec, staggered_z_spec, tilted_ising_spec, total_magnetization_spec, DistributionKind,
};
use qpe_spectra::{EnsembleSpec, ModelSpec};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum PresetModel {
    /// J Σ Z_i Z_{i+1} + g Σ X_i + h Σ Z_i on an open chain.
    TiltedIsing {
        n: usize,
        #[serde(default = "default_j")]
        j: f64,
        #[serde(default = "default_g")]
        g: f64,
        #[serde(default = "default_h")]
        h: f64,
    },
    /// J Σ (XX + YY + ZZ) on an open chain.
    Heisenberg {
        n: usize,
        #[serde(default = "default_j")]
        j: f64,
    },
}

fn default_j() -> f64 {
    1.0
}

fn default_g() -> f64 {
    1.05
}

fn default_h() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelConfig {
    Preset(PresetModel),
    Spec(ModelSpec),
}

impl ModelConfig {
    pub fn to_spec(&self) -> ModelSpec {
        match self {
            ModelConfig::Preset(PresetModel::TiltedIsing { n, j, g, h }) => tilted_ising_spec(*n, *j, *g, *h),
            ModelConfig::Preset(PresetModel::Heisenberg { n, j }) => heisenberg_spec(*n, *j),
            ModelConfig::Spec(spec) => spec.clone(),
        }
    }
}

/// Observable given by preset name (`total_sz`, `staggered_sz`,
/// `single_sz`, `single_sz:<site>`) or as an explicit Pauli sum.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ObservableConfig {
    Preset(String),
    Spec(ModelSpec),
}

impl ObservableConfig {
    pub fn to_spec(&self, n: usize) -> std::result::Result<ModelSpec, String> {
        match self {
            ObservableConfig::Spec(spec) => Ok(spec.clone()),
            ObservableConfig::Preset(name) => match name.split_once(':') {
                None if name == "total_sz" => Ok(total_magnetization_spec(n)),
                None if name == "staggered_sz" => Ok(staggered_z_spec(n)),
                None if name == "single_sz" => single_site_z_spec(n, 0).map_err(|e| e.to_string()),
                Some(("single_sz", site)) => {
                    let site: usize = site.parse().map_err(|_| format!("bad site index in {name:?}"))?;
                    single_site_z_spec(n, site).map_err(|e| e.to_string())
                }
                _ => Err(format!(
                    "unknown observable preset {name:?} (expected total_sz, staggered_sz, single_sz or single_sz:<site>)"
                )),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepMode {
    /// Use the purified operator state directly.
    #[default]
    Exact,
    /// Repeat the post-selected preparation circuit until it accepts.
    Circuit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepConfig {
    #[serde(default)]
    pub mode: PrepMode,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u64,
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_max_attempts() -> u64 {
    10_000
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            mode: PrepMode::Exact,
            epsilon: default_epsilon(),
            max_attempts: default_max_attempts(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum QpeConfig {
    Explicit {
        l: u32,
        delta: f64,
    },
    /// ω_max defaults to twice the spectral width of H, which keeps
    /// positive and negative gaps on distinct wrapped outcomes.
    AutoPlan {
        gamma: f64,
        auto_plan: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        omega_max: Option<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQpe {
    l: Option<u32>,
    delta: Option<f64>,
    gamma: Option<f64>,
    auto_plan: Option<bool>,
    omega_max: Option<f64>,
}

/// Grid for the reference spectrum. Defaults: γ = 2π/(Δ2^l), ω over the
/// unaliased window [-π/Δ, π/Δ], 4·2^l + 1 points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
}

/// Acceptance/fidelity sweep over log-spaced φ for synthetic observables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepStudyConfig {
    #[serde(default = "all_distributions")]
    pub distributions: Vec<DistributionKind>,
    #[serde(default = "default_study_n")]
    pub n: usize,
    #[serde(default = "default_parameter")]
    pub parameter: f64,
    /// Independent observables per distribution.
    #[serde(default = "default_study_seeds")]
    pub seeds: u64,
    #[serde(default = "default_phi_min")]
    pub phi_min: f64,
    #[serde(default = "default_phi_max")]
    pub phi_max: f64,
    #[serde(default = "default_phi_points")]
    pub points: usize,
}

fn all_distributions() -> Vec<DistributionKind> {
    DistributionKind::ALL.to_vec()
}

fn default_study_n() -> usize {
    10
}

fn default_parameter() -> f64 {
    1.0
}

fn default_study_seeds() -> u64 {
    1
}

fn default_phi_min() -> f64 {
    1e-3
}

fn default_phi_max() -> f64 {
    std::f64::consts::PI
}

fn default_phi_points() -> usize {
    64
}

impl Default for PrepStudyConfig {
    fn default() -> Self {
        Self {
            distributions: all_distributions(),
            n: default_study_n(),
            parameter: default_parameter(),
            seeds: default_study_seeds(),
            phi_min: default_phi_min(),
            phi_max: default_phi_max(),
            points: default_phi_points(),
        }
    }
}

impl PrepStudyConfig {
    fn validate(&self) -> Result<()> {
        if self.distributions.is_empty() {
            return Err(CliError::config("prepstudy.distributions", "needs at least one distribution"));
        }
        if !(self.parameter > 0.0 && self.parameter.is_finite()) {
            return Err(CliError::config("prepstudy.parameter", "must be positive"));
        }
        if !(self.phi_min > 0.0 && self.phi_min < self.phi_max && self.phi_max.is_finite()) {
            return Err(CliError::config("prepstudy.phi_min", "need 0 < phi_min < phi_max"));
        }
        if self.points < 2 {
            return Err(CliError::config("prepstudy.points", "need at least 2 points"));
        }
        if self.seeds == 0 {
            return Err(CliError::config("prepstudy.seeds", "need at least one seed"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub observable: ObservableConfig,
    pub ensemble: EnsembleSpec,
    pub prep: PrepConfig,
    pub qpe: QpeConfig,
    /// 0 means exact distributions only.
    pub shots: u64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub spectrum: SpectrumConfig,
    pub prepstudy: PrepStudyConfig,
}

impl ExperimentConfig {
    pub fn model_spec(&self) -> ModelSpec {
        self.model.to_spec()
    }

    pub fn observable_spec(&self) -> ModelSpec {
        self.observable
            .to_spec(self.model_spec().n)
            .expect("observable checked by validate_config")
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Value,
    observable: Value,
    #[serde(default)]
    ensemble: EnsembleSpec,
    #[serde(default)]
    prep: PrepConfig,
    qpe: Value,
    #[serde(default)]
    shots: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    #[serde(default)]
    spectrum: SpectrumConfig,
    #[serde(default)]
    prepstudy: PrepStudyConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Deserializes `value`, reporting errors as `prefix.inner.path`.
fn at_path<T: DeserializeOwned>(prefix: &str, value: Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix, inner.as_str()) {
            (p, ".") => p.to_string(),
            ("", i) => i.to_string(),
            (p, i) => format!("{p}.{i}"),
        };
        CliError::config(if path.is_empty() { ".".to_string() } else { path }, e.into_inner().to_string())
    })
}

fn parse_json(raw: &str) -> Result<Value> {
    serde_json::from_str(raw).map_err(|e| CliError::config(".", format!("invalid JSON: {e}")))
}

fn check_spec(path: &str, spec: &ModelSpec) -> Result<()> {
    spec.validate().map_err(|e| match e {
        qpe_spectra::Error::QubitCapExceeded { .. } => CliError::ResourceCap(e),
        other => CliError::config(path, other.to_string()),
    })
}

fn model_from(value: Value) -> Result<ModelConfig> {
    let model = match &value {
        Value::Object(map) if map.contains_key("preset") => ModelConfig::Preset(at_path("model", value)?),
        Value::Object(_) => ModelConfig::Spec(at_path("model", value)?),
        _ => return Err(CliError::config("model", "expected an object (preset or Pauli-sum spec)")),
    };
    check_spec("model", &model.to_spec())?;
    Ok(model)
}

fn observable_from(value: Value, n: usize) -> Result<ObservableConfig> {
    let observable = match value {
        Value::String(name) => ObservableConfig::Preset(name),
        v @ Value::Object(_) => ObservableConfig::Spec(at_path("observable", v)?),
        _ => return Err(CliError::config("observable", "expected a preset name or a Pauli-sum spec")),
    };
    let spec = observable.to_spec(n).map_err(|m| CliError::config("observable", m))?;
    check_spec("observable", &spec)?;
    if spec.n != n {
        return Err(CliError::config(
            "observable.n",
            format!("observable acts on {} sites but the model has {n}", spec.n),
        ));
    }
    Ok(observable)
}

fn positive(path: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::config(path, format!("must be positive and finite, got {x}")))
    }
}

fn qpe_from(value: Value) -> Result<QpeConfig> {
    let raw: RawQpe = at_path("qpe", value)?;
    let explicit = raw.l.is_some() || raw.delta.is_some();
    let planned = raw.gamma.is_some() || raw.auto_plan.is_some() || raw.omega_max.is_some();
    match (explicit, planned) {
        (true, true) => Err(CliError::config(
            "qpe",
            "conflicting resolution: give either explicit (l, delta) or (gamma, auto_plan: true), not both",
        )),
        (false, false) => Err(CliError::config("qpe", "missing resolution: give (l, delta) or (gamma, auto_plan: true)")),
        (true, false) => {
            let l = raw.l.ok_or_else(|| CliError::config("qpe.l", "missing field `l`"))?;
            let delta = raw.delta.ok_or_else(|| CliError::config("qpe.delta", "missing field `delta`"))?;
            if l == 0 {
                return Err(CliError::config("qpe.l", "needs at least one phase bit"));
            }
            Ok(QpeConfig::Explicit {
                l,
                delta: positive("qpe.delta", delta)?,
            })
        }
        (false, true) => {
            if raw.auto_plan != Some(true) {
                return Err(CliError::config("qpe.auto_plan", "gamma requires auto_plan: true"));
            }
            let gamma = raw.gamma.ok_or_else(|| CliError::config("qpe.gamma", "missing field `gamma`"))?;
            let omega_max = raw.omega_max.map(|w| positive("qpe.omega_max", w)).transpose()?;
            Ok(QpeConfig::AutoPlan {
                gamma: positive("qpe.gamma", gamma)?,
                auto_plan: true,
                omega_max,
            })
        }
    }
}

/// Parses a JSON experiment document, applies defaults and rejects unknown
/// fields. Errors name the offending field path.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = at_path("", parse_json(raw)?)?;
    let model = model_from(raw.model)?;
    let n = model.to_spec().n;
    let observable = observable_from(raw.observable, n)?;
    let qpe = qpe_from(raw.qpe)?;
    raw.ensemble
        .validate()
        .map_err(|e| CliError::config("ensemble", e.to_string()))?;
    if !(raw.prep.epsilon > 0.0 && raw.prep.epsilon < 1.0) {
        return Err(CliError::config("prep.epsilon", format!("must lie in (0, 1), got {}", raw.prep.epsilon)));
    }
    if raw.prep.max_attempts == 0 {
        return Err(CliError::config("prep.max_attempts", "must be at least 1"));
    }
    if let Some(points) = raw.spectrum.points {
        if points < 2 {
            return Err(CliError::config("spectrum.points", "need at least 2 points"));
        }
    }
    if let Some(g) = raw.spectrum.gamma {
        positive("spectrum.gamma", g)?;
    }
    if let Some(w) = raw.spectrum.omega_max {
        positive("spectrum.omega_max", w)?;
    }
    raw.prepstudy.validate()?;
    Ok(ExperimentConfig {
        model,
        observable,
        ensemble: raw.ensemble,
        prep: raw.prep,
        qpe,
        shots: raw.shots,
        seed: raw.seed,
        output_dir: raw.output_dir,
        spectrum: raw.spectrum,
        prepstudy: raw.prepstudy,
    })
}

/// Settings of the `prepstudy` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub prepstudy: PrepStudyConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            prepstudy: PrepStudyConfig::default(),
            seed: 0,
            output_dir: default_output_dir(),
        }
    }
}

/// Accepts a full experiment document or one holding only `prepstudy`,
/// `seed` and `output_dir`.
pub fn validate_study_config(raw: &str) -> Result<StudyConfig> {
    let value = parse_json(raw)?;
    if value.get("model").is_some() {
        let full = validate_config(raw)?;
        return Ok(StudyConfig {
            prepstudy: full.prepstudy,
            seed: full.seed,
            output_dir: full.output_dir,
        });
    }
    let study: StudyConfig = at_path("", value)?;
    study.prepstudy.validate()?;
    Ok(study)
}
