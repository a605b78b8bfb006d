//! The five supervised models trained on latent features.

pub mod forest;
pub mod knn;
pub mod mlp;
pub mod svm;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkernel::{Matrix, SeededRng};
use crate::persist::{self, ContainerError, Header};

pub use forest::{ForestParams, RandomForest};
pub use knn::{Knn, KnnParams};
pub use mlp::{MlpClassifier, MlpParams};
pub use svm::{LinearSvm, ObjectiveTrace, SvmParams};
pub use tree::{DecisionTree, TreeNode, TreeParams};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("non-finite feature at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("model expects {expected} features, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid {kind} hyperparameters: {message}")]
    InvalidParams { kind: ClassifierKind, message: String },
    #[error("{kind} training failed: {message}")]
    Training { kind: ClassifierKind, message: String },
    #[error(transparent)]
    ModelFile(#[from] ContainerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Dt,
    Rf,
    Knn,
    Mlp,
    Svm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Dt,
        ClassifierKind::Rf,
        ClassifierKind::Knn,
        ClassifierKind::Mlp,
        ClassifierKind::Svm,
    ];

    /// Upper-case row label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            ClassifierKind::Dt => "DT",
            ClassifierKind::Rf => "RF",
            ClassifierKind::Knn => "KNN",
            ClassifierKind::Mlp => "MLP",
            ClassifierKind::Svm => "SVM",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dt" => Ok(Self::Dt),
            "rf" => Ok(Self::Rf),
            "knn" => Ok(Self::Knn),
            "mlp" => Ok(Self::Mlp),
            "svm" => Ok(Self::Svm),
            _ => Err(format!("unknown classifier kind {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierParams {
    Dt(TreeParams),
    Rf(ForestParams),
    Knn(KnnParams),
    Mlp(MlpParams),
    Svm(SvmParams),
}

impl ClassifierParams {
    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Dt => Self::Dt(TreeParams::default()),
            ClassifierKind::Rf => Self::Rf(ForestParams::default()),
            ClassifierKind::Knn => Self::Knn(KnnParams::default()),
            ClassifierKind::Mlp => Self::Mlp(MlpParams::default()),
            ClassifierKind::Svm => Self::Svm(SvmParams::default()),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Self::Dt(_) => ClassifierKind::Dt,
            Self::Rf(_) => ClassifierKind::Rf,
            Self::Knn(_) => ClassifierKind::Knn,
            Self::Mlp(_) => ClassifierKind::Mlp,
            Self::Svm(_) => ClassifierKind::Svm,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Self::Dt(p) => p.validate(),
            Self::Rf(p) => p.validate(),
            Self::Knn(p) => p.validate(),
            Self::Mlp(p) => p.validate(),
            Self::Svm(p) => p.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub params: ClassifierParams,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(params: ClassifierParams, seed: u64) -> Self {
        Self { params, seed }
    }

    pub fn default_for(kind: ClassifierKind, seed: u64) -> Self {
        Self::new(ClassifierParams::default_for(kind), seed)
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ClassifierModel {
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    Knn(Knn),
    Mlp(MlpClassifier),
    Svm(LinearSvm),
}

/// Index of the first maximum count.
pub(crate) fn argmax_counts(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Index of the first maximum value.
pub(crate) fn argmax_values(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_training_data(x: &Matrix, y: &[usize]) -> Result<usize, ClassifierError> {
    if x.rows() != y.len() {
        return Err(ClassifierError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(ClassifierError::TooFewRows(y.len()));
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(ClassifierError::SingleClass);
    }
    if let Some(pos) = x.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(ClassifierError::NonFinite {
            row: pos / x.cols(),
            col: pos % x.cols(),
        });
    }
    Ok(y.iter().copied().max().expect("nonempty") + 1)
}

/// Fits the model described by `spec`. The class range is `0..=max(y)`.
pub fn train(spec: &ClassifierSpec, x: &Matrix, y: &[usize]) -> Result<ClassifierModel, ClassifierError> {
    let kind = spec.kind();
    spec.params
        .validate()
        .map_err(|message| ClassifierError::InvalidParams { kind, message })?;
    let n_classes = check_training_data(x, y)?;
    let model = match &spec.params {
        ClassifierParams::Dt(p) => {
            let mut rng = SeededRng::new(spec.seed);
            ClassifierModel::DecisionTree(DecisionTree::fit(x, y, n_classes, p, &mut rng))
        }
        ClassifierParams::Rf(p) => ClassifierModel::RandomForest(RandomForest::fit(x, y, n_classes, p, spec.seed)),
        ClassifierParams::Knn(p) => {
            if p.k > x.rows() {
                return Err(ClassifierError::InvalidParams {
                    kind,
                    message: format!("k = {} exceeds the {} training rows", p.k, x.rows()),
                });
            }
            ClassifierModel::Knn(Knn::fit(x, y, n_classes, p))
        }
        ClassifierParams::Mlp(p) => ClassifierModel::Mlp(
            MlpClassifier::fit(x, y, n_classes, p, spec.seed)
                .map_err(|message| ClassifierError::Training { kind, message })?,
        ),
        ClassifierParams::Svm(p) => ClassifierModel::Svm(LinearSvm::fit(x, y, n_classes, p, spec.seed)),
    };
    Ok(model)
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Self::DecisionTree(_) => ClassifierKind::Dt,
            Self::RandomForest(_) => ClassifierKind::Rf,
            Self::Knn(_) => ClassifierKind::Knn,
            Self::Mlp(_) => ClassifierKind::Mlp,
            Self::Svm(_) => ClassifierKind::Svm,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Self::DecisionTree(m) => m.n_features,
            Self::RandomForest(m) => m.n_features,
            Self::Knn(m) => m.n_features,
            Self::Mlp(m) => m.n_features,
            Self::Svm(m) => m.n_features,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            Self::DecisionTree(m) => m.n_classes,
            Self::RandomForest(m) => m.n_classes,
            Self::Knn(m) => m.n_classes,
            Self::Mlp(m) => m.n_classes,
            Self::Svm(m) => m.n_classes,
        }
    }

    fn check_input(&self, x: &Matrix) -> Result<(), ClassifierError> {
        if x.cols() != self.n_features() {
            return Err(ClassifierError::Dimension {
                expected: self.n_features(),
                found: x.cols(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>, ClassifierError> {
        self.check_input(x)?;
        let labels = match self {
            Self::DecisionTree(m) => x.row_iter().map(|r| m.predict_row(r)).collect(),
            Self::RandomForest(m) => x.row_iter().map(|r| m.predict_row(r)).collect(),
            Self::Knn(m) => x.row_iter().map(|r| m.predict_row(r)).collect(),
            Self::Svm(m) => x.row_iter().map(|r| m.predict_row(r)).collect(),
            Self::Mlp(m) => {
                let p = m.proba(x).map_err(|e| ClassifierError::Training {
                    kind: ClassifierKind::Mlp,
                    message: e.to_string(),
                })?;
                p.row_iter().map(argmax_values).collect()
            }
        };
        Ok(labels)
    }

    /// One score row per input row. Softmax and vote-fraction rows sum to 1;
    /// SVM rows are min-max mapped decision values.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix, ClassifierError> {
        self.check_input(x)?;
        let k = self.n_classes();
        let rows: Vec<Vec<f64>> = match self {
            Self::DecisionTree(m) => x
                .row_iter()
                .map(|r| {
                    let h = m.leaf_histogram(r);
                    let total: usize = h.iter().sum();
                    h.iter().map(|&c| c as f64 / total as f64).collect()
                })
                .collect(),
            Self::RandomForest(m) => x.row_iter().map(|r| m.proba_row(r)).collect(),
            Self::Knn(m) => x.row_iter().map(|r| m.proba_row(r)).collect(),
            Self::Svm(m) => x.row_iter().map(|r| m.scores_row(r)).collect(),
            Self::Mlp(m) => {
                return m.proba(x).map_err(|e| ClassifierError::Training {
                    kind: ClassifierKind::Mlp,
                    message: e.to_string(),
                })
            }
        };
        let flat = rows.into_iter().flatten().collect();
        Ok(Matrix::from_vec(x.rows(), k, flat).expect("one score per class"))
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        let file = ClassifierFile {
            header: Header::new(CLASSIFIER_KIND),
            classifier: self.kind(),
            n_features: self.n_features(),
            n_classes: self.n_classes(),
            model: self.clone(),
        };
        persist::write_json(&file, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ClassifierModel, ClassifierError> {
        let file: ClassifierFile = persist::read_json(path)?;
        file.header.check(CLASSIFIER_KIND)?;
        let m = file.model;
        if m.kind() != file.classifier || m.n_features() != file.n_features || m.n_classes() != file.n_classes {
            return Err(ContainerError::ShapeHeader(format!(
                "header says {} with {} features / {} classes, body holds {} with {} / {}",
                file.classifier,
                file.n_features,
                file.n_classes,
                m.kind(),
                m.n_features(),
                m.n_classes()
            ))
            .into());
        }
        let storage = match &m {
            Self::Knn(k) => k.check_storage(),
            Self::Svm(s) => s.check_storage(),
            _ => Ok(()),
        };
        storage.map_err(|e| ContainerError::ShapeHeader(e))?;
        Ok(m)
    }
}

pub const CLASSIFIER_KIND: &str = "classifier";

#[derive(Debug, Serialize, Deserialize)]
struct ClassifierFile {
    #[serde(flatten)]
    header: Header,
    classifier: ClassifierKind,
    n_features: usize,
    n_classes: usize,
    model: ClassifierModel,
}
