//! Experiment configuration, read from a single JSON document.
//!
//! ```json
//! {
//!   "dataset": { "synthetic": { "n": 2000, "d": 10, "class_count": 2,
//!                               "class_separation": 4.0, "seed": 1 } },
//!   "arch": "lr",
//!   "train": { "epochs": 100, "learning_rate": 0.01 },
//!   "mechanisms": ["objective", "output", { "kind": "input", "delta": 0.05 }],
//!   "epsilons": [0.01, 1, 100],
//!   "seeds": [0, 1, 2],
//!   "output_dir": "out"
//! }
//! ```
//!
//! Omitted fields take their defaults: all five mechanisms supported by the
//! architecture, the epsilon grid `1e-2 ..= 1e4` in decades, seed `0`.

use std::path::{Path, PathBuf};

use dputil_core::attack::AttackConfig;
use dputil_core::dataset::SyntheticSpec;
use dputil_core::learners::{ArchKind, TrainConfig};
use dputil_core::mechanisms::{
    ErmNoise, GradientVariant, MechanismKind, MechanismSpec, PrivacyBudget, VoteNoise, EPSILON_RANGE,
};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, HarnessError, Result};

pub const DEFAULT_EPSILONS: [f64; 7] = [1e-2, 1e-1, 1.0, 10.0, 1e2, 1e3, 1e4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        #[serde(default = "default_label_column")]
        label_column: String,
        class_count: usize,
    },
    Synthetic(SyntheticSpec),
}

fn default_label_column() -> String {
    "label".into()
}

/// One mechanism of the sweep with optional overrides of its constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismSettings {
    pub kind: MechanismKind,
    /// Fixed delta for this mechanism instead of the training-set default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teachers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_variant: Option<GradientVariant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erm_noise: Option<ErmNoise>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vote_noise: Option<VoteNoise>,
}

impl MechanismSettings {
    pub fn new(kind: MechanismKind) -> Self {
        MechanismSettings {
            kind,
            delta: None,
            clip_norm: None,
            c2: None,
            teachers: None,
            lipschitz: None,
            input_constant: None,
            gradient_variant: None,
            erm_noise: None,
            vote_noise: None,
        }
    }

    /// The full spec at `budget`, with overrides applied.
    pub fn spec(&self, budget: PrivacyBudget) -> MechanismSpec {
        let mut spec = MechanismSpec::new(self.kind, budget);
        if let Some(v) = self.clip_norm {
            spec.clip_norm = v;
        }
        if let Some(v) = self.c2 {
            spec.c2 = v;
        }
        spec.teachers = self.teachers;
        if let Some(v) = self.lipschitz {
            spec.lipschitz = v;
        }
        if let Some(v) = self.input_constant {
            spec.input_constant = v;
        }
        if let Some(v) = self.gradient_variant {
            spec.gradient_variant = v;
        }
        if let Some(v) = self.erm_noise {
            spec.erm_noise = v;
        }
        if let Some(v) = self.vote_noise {
            spec.vote_noise = v;
        }
        spec
    }
}

/// Either a bare kind (`"gradient"`) or a settings object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MechanismEntry {
    Kind(MechanismKind),
    Settings(MechanismSettings),
}

impl MechanismEntry {
    pub fn settings(&self) -> MechanismSettings {
        match self {
            MechanismEntry::Kind(k) => MechanismSettings::new(*k),
            MechanismEntry::Settings(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub arch: ArchKind,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub mechanisms: Vec<MechanismEntry>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_epsilons() -> Vec<f64> {
    DEFAULT_EPSILONS.to_vec()
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    /// Parses `path`; a relative CSV path is resolved against the config's
    /// directory. An empty mechanism list becomes every mechanism the
    /// architecture supports.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.into(), source })?;
        if let DatasetSource::Csv { path: csv, .. } = &mut config.dataset {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        config.fill_defaults();
        config.validate()?;
        Ok(config)
    }

    pub fn fill_defaults(&mut self) {
        if self.mechanisms.is_empty() {
            self.mechanisms = MechanismKind::ALL
                .into_iter()
                .filter(|k| k.supports(self.arch))
                .map(MechanismEntry::Kind)
                .collect();
        }
    }

    pub fn mechanism_settings(&self) -> Vec<MechanismSettings> {
        self.mechanisms.iter().map(MechanismEntry::settings).collect()
    }

    /// Rejects anything that would fail before training starts.
    pub fn validate(&self) -> Result<()> {
        if self.mechanisms.is_empty() {
            return Err(HarnessError::Config("at least one mechanism is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        if self.epsilons.is_empty() {
            return Err(HarnessError::Config("the epsilon grid is empty".into()));
        }
        let (lo, hi) = EPSILON_RANGE;
        if let Some(e) = self.epsilons.iter().find(|e| !(**e >= lo && **e <= hi)) {
            return Err(HarnessError::Config(format!("epsilon {e} is outside [{lo}, {hi}]")));
        }
        self.train.validate()?;
        let mut seen = Vec::new();
        for settings in self.mechanism_settings() {
            if seen.contains(&settings.kind) {
                return Err(HarnessError::Config(format!(
                    "mechanism `{}` is listed twice",
                    settings.kind.as_str()
                )));
            }
            seen.push(settings.kind);
            if let Some(d) = settings.delta {
                PrivacyBudget::new(1.0, d).map_err(|e| HarnessError::Config(e.to_string()))?;
            }
            settings
                .spec(PrivacyBudget::new(1.0, 0.0)?)
                .validate_for(self.arch)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if let DatasetSource::Synthetic(spec) = &self.dataset {
            spec.validate()?;
        }
        Ok(())
    }
}
