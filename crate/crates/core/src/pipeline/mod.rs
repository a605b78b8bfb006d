//! End-to-end workflow: preprocess, train the autoencoder per latent size,
//! extract latent features, train and evaluate the classifiers per task,
//! and render comparison tables.

pub mod config;
pub mod manifest;
pub mod report;
mod stages;

use thiserror::Error;

use crate::autoencoder::AeError;
use crate::classifiers::ClassifierError;
use crate::dataset::DatasetError;
use crate::metrics::MetricsError;
use crate::persist::ContainerError;

pub use config::{AeTraining, ClassifierEntry, RunConfig, SelectionMetric};
pub use manifest::{Artifact, RunManifest, StageRecord};
pub use report::{EvalSummary, ModelReport, RowSummary, Scores};
pub use stages::{
    cmd_compare, cmd_extract, cmd_preprocess, cmd_run_all, cmd_train_ae, cmd_train_eval, layout, Pipeline,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Autoencoder(#[from] AeError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Baselines { path: String, line: u64, message: String },
    #[error("{stage} needs {path}; run the earlier stages first")]
    MissingArtifact { stage: String, path: String },
    #[error("feature width mismatch: model expects {expected}, data has {found}")]
    Dimension { expected: usize, found: usize },
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<PipelineError>,
    },
}

impl PipelineError {
    /// Process exit status: 1 configuration, 2 data, 3 training.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Autoencoder(AeError::Config(_)) => 1,
            Self::Classifier(ClassifierError::InvalidParams { .. }) => 1,
            Self::Autoencoder(_) | Self::Classifier(_) => 3,
            Self::Stage { source, .. } => source.exit_code(),
            Self::Dataset(_)
            | Self::Metrics(_)
            | Self::Container(_)
            | Self::Io { .. }
            | Self::Baselines { .. }
            | Self::MissingArtifact { .. }
            | Self::Dimension { .. } => 2,
        }
    }

    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            Self::Stage { .. } => self,
            other => Self::Stage {
                stage: stage.to_string(),
                source: Box::new(other),
            },
        }
    }
}
