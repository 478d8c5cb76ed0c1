//! TOML experiment configuration.
//!
//! ```toml
//! name = "gn-corrupted"
//! rollouts = 200
//! seed = 7
//! eta = 0.01
//!
//! [environment]
//! task = "guess_numbers"
//! preset = "gn-3-5-1-2"
//!
//! [agent.corruption]
//! kind = "psi_coupled_mix"
//! eps0 = 0.1
//! slope = 0.3
//! eps_cap = 0.9
//!
//! [truncation]
//! kind = "gn_consistency"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::advantage::{SyntheticDrift, ValueCalibration};
use crate::agents::{CorruptionSpec, PolicySpec};
use crate::env::cd::CircuitInstance;
use crate::env::gn::{self, GuessNumbersInstance};
use crate::env::pe::PreferenceInstance;
use crate::env::{Instance, TaskKind};
use crate::error::{Error, Result};
use crate::truncation::TruncationRule;

pub const DEFAULT_HORIZON: usize = 10;
pub const CD_PRESET: &str = "cd-default";
pub const PE_PRESET: &str = "pe-default";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub task: TaskKind,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub instance_file: Option<PathBuf>,
    /// Number of hidden circuits for the default CircuitDecoding library.
    #[serde(default)]
    pub labels: Option<usize>,
    /// Draw a fresh hidden state per rollout from the instance's class.
    #[serde(default = "yes")]
    pub resample: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub corruption: CorruptionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_min_drift")]
    pub min_drift: f64,
    #[serde(default = "default_pairs")]
    pub lipschitz_pairs: usize,
    /// Rollouts whose visited beliefs feed the update-error fit.
    #[serde(default = "default_fit_rollouts")]
    pub fit_rollouts: usize,
    #[serde(default)]
    pub drift_edges: Option<Vec<f64>>,
}

fn default_window() -> usize {
    3
}
fn default_min_drift() -> f64 {
    1e-6
}
fn default_pairs() -> usize {
    200
}
fn default_fit_rollouts() -> usize {
    50
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window: default_window(),
            min_drift: default_min_drift(),
            lipschitz_pairs: default_pairs(),
            fit_rollouts: default_fit_rollouts(),
            drift_edges: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub environment: EnvironmentConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub truncation: TruncationRule,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_rollouts")]
    pub rollouts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_psi_max")]
    pub psi_max: f64,
    #[serde(default = "default_commit")]
    pub commit_confidence: f64,
    #[serde(default)]
    pub calibration: ValueCalibration,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub synthetic: Option<SyntheticDrift>,
}

fn default_name() -> String {
    "experiment".into()
}
fn default_rollouts() -> usize {
    100
}
fn one() -> f64 {
    1.0
}
fn default_eta() -> f64 {
    0.01
}
fn default_psi_max() -> f64 {
    crate::belief::DEFAULT_PSI_MAX
}
fn default_commit() -> f64 {
    0.5
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Every preset name accepted in `[environment] preset`.
pub fn preset_names() -> Vec<String> {
    let mut names: Vec<String> = gn::PRESETS.iter().map(|&p| gn::preset_name(p)).collect();
    names.push(CD_PRESET.into());
    names.push(PE_PRESET.into());
    names
}

impl ExperimentConfig {
    /// Minimal config for a task with its default preset.
    pub fn for_task(task: TaskKind) -> Self {
        let preset = match task {
            TaskKind::GuessNumbers => "gn-3-5-1-2",
            TaskKind::CircuitDecoding => CD_PRESET,
            TaskKind::PreferenceEstimation => PE_PRESET,
        };
        let text = format!(
            "[environment]\ntask = \"{}\"\npreset = \"{preset}\"\n",
            match task {
                TaskKind::GuessNumbers => "guess_numbers",
                TaskKind::CircuitDecoding => "circuit_decoding",
                TaskKind::PreferenceEstimation => "preference_estimation",
            }
        );
        Self::from_toml(&text).expect("built-in config parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `instance_file` is resolved against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(file), Some(dir)) = (&cfg.environment.instance_file, path.parent()) {
            if file.is_relative() {
                cfg.environment.instance_file = Some(dir.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.horizon() == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.rollouts == 0 {
            return bad("rollouts must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0,1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0,1]", self.lambda));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad(format!("eta {} outside [0,1]", self.eta));
        }
        if !(self.psi_max > 0.0) {
            return bad("psi_max must be positive".into());
        }
        if !(self.commit_confidence > 0.0 && self.commit_confidence <= 1.0) {
            return bad(format!(
                "commit_confidence {} outside (0,1]",
                self.commit_confidence
            ));
        }
        if self.analysis.window == 0 {
            return bad("analysis.window must be at least 1".into());
        }
        let env = &self.environment;
        if env.preset.is_some() == env.instance_file.is_some() {
            return bad("environment needs exactly one of `preset` or `instance_file`".into());
        }
        let nested = [
            self.agent.policy.validate(),
            self.agent.corruption.validate(),
            self.truncation.validate(),
            self.calibration.validate(),
        ];
        for r in nested {
            r.map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(s) = &self.synthetic {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return bad("sweep.values is empty".into());
            }
        }
        Ok(())
    }

    /// Base instance; presets draw their hidden state from `seed`.
    pub fn instance(&self) -> Result<Instance> {
        let env = &self.environment;
        if let Some(path) = &env.instance_file {
            let inst = Instance::load(path)?;
            let kind = match inst {
                Instance::GuessNumbers(_) => TaskKind::GuessNumbers,
                Instance::CircuitDecoding(_) => TaskKind::CircuitDecoding,
                Instance::PreferenceEstimation(_) => TaskKind::PreferenceEstimation,
            };
            if kind != env.task {
                return Err(Error::Config(format!(
                    "instance file holds a {kind:?} instance but task is {:?}",
                    env.task
                )));
            }
            return Ok(inst);
        }
        let name = env.preset.as_deref().unwrap_or_default();
        let seed = self.seed;
        match env.task {
            TaskKind::GuessNumbers => {
                let (a, b, x, y) = gn::parse_preset(name).ok_or_else(|| {
                    Error::Config(format!("unknown GuessNumbers preset `{name}`"))
                })?;
                Ok(Instance::GuessNumbers(GuessNumbersInstance::from_preset(
                    a, b, x, y, seed,
                )?))
            }
            TaskKind::CircuitDecoding if name == CD_PRESET => Ok(Instance::CircuitDecoding(
                CircuitInstance::default_library(env.labels.unwrap_or(2), seed)?,
            )),
            TaskKind::PreferenceEstimation if name == PE_PRESET => Ok(
                Instance::PreferenceEstimation(PreferenceInstance::default_catalogue(seed)?),
            ),
            _ => Err(Error::Config(format!(
                "unknown preset `{name}` for {:?}",
                env.task
            ))),
        }
    }

    /// Sets one numeric parameter by dotted name (used by sweeps).
    pub fn set_parameter(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!(
                    "{name} needs a non-negative integer, got {v}"
                )))
            }
        };
        match name {
            "eta" => self.eta = value,
            "horizon" => self.horizon = Some(as_count(value)?),
            "rollouts" => self.rollouts = as_count(value)?,
            "commit_confidence" => self.commit_confidence = value,
            "policy.temperature" => self.agent.policy.temperature = value,
            "corruption.eps0" => self.agent.corruption.eps0 = value,
            "corruption.slope" => self.agent.corruption.slope = value,
            "corruption.eps_cap" => self.agent.corruption.eps_cap = value,
            "truncation.k" => self.truncation.k = Some(as_count(value)?),
            "truncation.delta_min" => self.truncation.delta_min = value,
            "truncation.alpha" => self.truncation.alpha = value,
            "truncation.beta" => self.truncation.beta = value,
            "synthetic.rho" => {
                self.synthetic
                    .get_or_insert_with(|| SyntheticDrift::standard(value))
                    .rho = value
            }
            other => return Err(Error::Config(format!("unknown sweep parameter `{other}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::CorruptionKind;
    use crate::truncation::RuleKind;

    const SAMPLE: &str = r#"
name = "t"
rollouts = 5
horizon = 4
eta = 0.02

[environment]
task = "guess_numbers"
preset = "gn-3-4-0-3"

[agent.policy]
kind = "uniform_consistent"

[agent.corruption]
kind = "psi_coupled_mix"
eps0 = 0.1
slope = 0.3
eps_cap = 0.8

[truncation]
kind = "gn_consistency"
"#;

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.horizon(), 4);
        assert_eq!(cfg.agent.corruption.kind, CorruptionKind::PsiCoupledMix);
        assert_eq!(cfg.truncation.kind, RuleKind::GnConsistency);
        assert!(matches!(cfg.instance().unwrap(), Instance::GuessNumbers(_)));
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.rollouts = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml("[environment]\ntask = \"chess\"").is_err());
        assert!(ExperimentConfig::from_toml(&format!("{SAMPLE}\nbogus = 1\n")).is_err());
        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert!(cfg.set_parameter("nope", 1.0).is_err());
        cfg.set_parameter("corruption.eps0", 0.2).unwrap();
        assert_eq!(cfg.agent.corruption.eps0, 0.2);
    }

    #[test]
    fn defaults_for_each_task() {
        for task in [
            TaskKind::GuessNumbers,
            TaskKind::CircuitDecoding,
            TaskKind::PreferenceEstimation,
        ] {
            let cfg = ExperimentConfig::for_task(task);
            cfg.validate().unwrap();
            cfg.instance().unwrap().task().unwrap();
        }
        assert_eq!(preset_names().len(), 11);
    }
}
