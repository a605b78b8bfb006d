//! Run configuration, read from a TOML file.
//!
//! Relative paths inside the file resolve against the file's directory.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autoencoder::AeConfig;
use crate::classifiers::{ClassifierKind, ClassifierParams, ClassifierSpec};
use crate::dataset::{Task, DEFAULT_DROPPED_COLUMNS, DEFAULT_LABEL_COLUMN};
use crate::numkernel::derive_seed_str;

use super::PipelineError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMetric {
    Precision,
    Recall,
    #[default]
    F1,
    Accuracy,
}

impl SelectionMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Precision => "precision",
            Self::Recall => "recall",
            Self::F1 => "f1",
            Self::Accuracy => "accuracy",
        }
    }
}

impl fmt::Display for SelectionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Autoencoder training settings; the layer widths come from the data and
/// the latent dimension list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AeTraining {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for AeTraining {
    fn default() -> Self {
        let d = AeConfig::default();
        Self {
            learning_rate: d.learning_rate,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
            validation_fraction: d.validation_fraction,
        }
    }
}

impl AeTraining {
    pub fn to_config(&self, input_dim: usize, bottleneck_dim: usize, seed: u64) -> AeConfig {
        AeConfig {
            input_dim,
            bottleneck_dim,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            validation_fraction: self.validation_fraction,
            seed,
        }
    }
}

/// One `[[classifiers]]` entry: `kind`, its hyperparameters, and an optional
/// seed (derived from the run seed when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierEntry {
    #[serde(flatten)]
    pub params: ClassifierParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ClassifierEntry {
    pub fn default_for(kind: ClassifierKind) -> Self {
        Self {
            params: ClassifierParams::default_for(kind),
            seed: None,
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub dataset: PathBuf,
    pub label_column: String,
    pub drop_columns: Vec<String>,
    pub seed: u64,
    /// Share of each class that goes to the training split.
    pub train_ratio: f64,
    pub tasks: Vec<Task>,
    pub latent_dims: Vec<usize>,
    pub autoencoder: AeTraining,
    pub classifiers: Vec<ClassifierEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baselines: Option<PathBuf>,
    pub selection_metric: SelectionMetric,
    pub output_dir: PathBuf,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            dataset: PathBuf::from("data/uav_cyber.csv"),
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
            drop_columns: DEFAULT_DROPPED_COLUMNS.iter().map(|s| s.to_string()).collect(),
            seed: 42,
            train_ratio: 0.8,
            tasks: vec![Task::Binary, Task::Multiclass],
            latent_dims: vec![4, 8],
            autoencoder: AeTraining::default(),
            classifiers: ClassifierKind::ALL.into_iter().map(ClassifierEntry::default_for).collect(),
            baselines: None,
            selection_metric: SelectionMetric::F1,
            output_dir: PathBuf::from("runs/default"),
            base_dir: PathBuf::from("."),
        }
    }
}

impl FromStr for RunConfig {
    type Err = PipelineError;
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let config: RunConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: RunConfig = text
            .parse()
            .map_err(|e: PipelineError| PipelineError::Config(format!("{}: {e}", path.display())))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return fail(format!(
                "unsupported config schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return fail(format!("train_ratio must be in (0, 1), got {}", self.train_ratio));
        }
        if self.tasks.is_empty() {
            return fail("at least one task is required".into());
        }
        if self.tasks.iter().collect::<BTreeSet<_>>().len() != self.tasks.len() {
            return fail("tasks contain duplicates".into());
        }
        if self.latent_dims.is_empty() || self.latent_dims.contains(&0) {
            return fail("latent_dims must be a nonempty list of positive sizes".into());
        }
        if self.latent_dims.iter().collect::<BTreeSet<_>>().len() != self.latent_dims.len() {
            return fail("latent_dims contain duplicates".into());
        }
        if self.classifiers.is_empty() {
            return fail("at least one classifier is required".into());
        }
        let mut seen = BTreeSet::new();
        for entry in &self.classifiers {
            if !seen.insert(entry.kind()) {
                return fail(format!("classifier {} is listed twice", entry.kind()));
            }
            if let Err(m) = entry.params.validate() {
                return fail(format!("classifier {}: {m}", entry.kind()));
            }
        }
        // Widths are checked again once the feature count is known.
        self.autoencoder
            .to_config(usize::MAX, 1, 0)
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.resolve(&self.dataset)
    }

    pub fn baselines_path(&self) -> Option<PathBuf> {
        self.baselines.as_deref().map(|p| self.resolve(p))
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn ae_seed(&self, n: usize) -> u64 {
        derive_seed_str(self.seed, &format!("autoencoder/n{n}"))
    }

    pub fn classifier_spec(&self, entry: &ClassifierEntry) -> ClassifierSpec {
        let seed = entry
            .seed
            .unwrap_or_else(|| derive_seed_str(self.seed, &format!("classifier/{}", entry.kind().label())));
        ClassifierSpec::new(entry.params.clone(), seed)
    }

    /// The configuration as recorded in the manifest: everything except the
    /// output location.
    pub fn snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
        }
        v
    }
}
