//! The eight classifiers, trained from scratch.
//!
//! Every model is a deterministic function of (data, config): randomized
//! steps draw from ChaCha8 streams derived from the config seed. One
//! dispatch surface covers them all:
//!
//! ```
//! use dyadflow_core::models::{train_model, ModelConfig, ModelKind};
//! use ndarray::array;
//!
//! let x = array![[0.0, 1.0], [0.1, 0.9], [1.0, 0.0], [0.9, 0.2]];
//! let y = [0, 0, 1, 1];
//! let cfg = ModelConfig::new(ModelKind::LogisticRegression, 2, 7);
//! let model = train_model(&cfg, &x, &y).unwrap();
//! assert_eq!(model.predict(&x).unwrap(), vec![0, 0, 1, 1]);
//! ```

mod linear;
mod network;
mod tree;

pub use linear::{train_logistic, train_svm, LinearModel, LogisticParams, SvmParams};
pub use network::{
    gradient_check, train_network, train_network_with_info, Dense, Mlp, NetworkParams,
    NetworkTrainInfo,
};
pub use tree::{train_forest, train_tree, DecisionTree, ForestParams, RandomForest, TreeParams};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{rows} feature rows but {labels} labels")]
    LabelLengthMismatch { rows: usize, labels: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("model expects {expected} features, got {got}")]
    FeatureCountMismatch { expected: usize, got: usize },
    #[error("non-finite value in feature matrix")]
    NonFinite,
    #[error("unknown model id {0:?}")]
    UnknownModel(String),
    #[error("config digest mismatch: file says {stored}, recomputed {computed}")]
    DigestMismatch { stored: String, computed: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The model zoo. The four network kinds differ only in depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "lr")]
    LogisticRegression,
    #[serde(rename = "svm")]
    Svm,
    #[serde(rename = "dt")]
    DecisionTree,
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "nn")]
    Nn,
    #[serde(rename = "dnn1")]
    Dnn1,
    #[serde(rename = "dnn2")]
    Dnn2,
    #[serde(rename = "dnn3")]
    Dnn3,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::LogisticRegression,
        ModelKind::Svm,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::Nn,
        ModelKind::Dnn1,
        ModelKind::Dnn2,
        ModelKind::Dnn3,
    ];

    /// Short id used on the command line and in report keys.
    pub fn id(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "lr",
            ModelKind::Svm => "svm",
            ModelKind::DecisionTree => "dt",
            ModelKind::RandomForest => "rf",
            ModelKind::Nn => "nn",
            ModelKind::Dnn1 => "dnn1",
            ModelKind::Dnn2 => "dnn2",
            ModelKind::Dnn3 => "dnn3",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "Logistic Regression",
            ModelKind::Svm => "Linear SVM",
            ModelKind::DecisionTree => "Decision Tree",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::Nn => "NN",
            ModelKind::Dnn1 => "DNN1",
            ModelKind::Dnn2 => "DNN2",
            ModelKind::Dnn3 => "DNN3",
        }
    }

    /// Hidden layer count for the network kinds, `None` otherwise.
    pub fn hidden_layers(self) -> Option<usize> {
        match self {
            ModelKind::Nn => Some(1),
            ModelKind::Dnn1 => Some(3),
            ModelKind::Dnn2 => Some(5),
            ModelKind::Dnn3 => Some(9),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        let lower = s.trim().to_ascii_lowercase();
        ModelKind::ALL
            .into_iter()
            .find(|k| k.id() == lower)
            .ok_or_else(|| ModelError::UnknownModel(s.to_string()))
    }
}

/// Hyperparameters for every kind, so one struct can ride along in configs
/// and reports. Only the block matching `ModelConfig::kind` is consulted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub logistic: LogisticParams,
    pub svm: SvmParams,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub network: NetworkParams,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            logistic: LogisticParams::default(),
            svm: SvmParams::default(),
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            network: NetworkParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n_classes: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: ModelParams,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, n_classes: usize, seed: u64) -> ModelConfig {
        ModelConfig { kind, n_classes, seed, params: ModelParams::default() }
    }

    /// Hex SHA-256 of the canonical JSON encoding. serde_json round-trips
    /// f64 exactly, so equal configs always digest equally.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in hash {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

/// A fitted classifier of any kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TrainedModel {
    Logistic(LinearModel),
    Svm(LinearModel),
    Tree(DecisionTree),
    Forest(RandomForest),
    Network(Mlp),
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Logistic(m) | TrainedModel::Svm(m) => m.n_features(),
            TrainedModel::Tree(m) => m.n_features,
            TrainedModel::Forest(m) => m.n_features,
            TrainedModel::Network(m) => m.n_features(),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            TrainedModel::Logistic(m) | TrainedModel::Svm(m) => m.n_classes(),
            TrainedModel::Tree(m) => m.n_classes,
            TrainedModel::Forest(m) => m.n_classes,
            TrainedModel::Network(m) => m.n_classes(),
        }
    }

    /// Per-class decision scores, one row per sample. Logits for the
    /// logistic and network models, margins for the SVM, class fractions
    /// for the trees. Predictions are the row argmax of this matrix.
    pub fn decision_scores(&self, x: &Array2<f64>) -> Result<Array2<f64>, ModelError> {
        if x.ncols() != self.n_features() {
            return Err(ModelError::FeatureCountMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        Ok(match self {
            TrainedModel::Logistic(m) | TrainedModel::Svm(m) => m.scores(x),
            TrainedModel::Tree(m) => m.scores(x),
            TrainedModel::Forest(m) => m.scores(x),
            TrainedModel::Network(m) => m.logits(x),
        })
    }

    /// Argmax class per row; ties go to the lowest class index.
    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<usize>, ModelError> {
        let scores = self.decision_scores(x)?;
        Ok(scores.rows().into_iter().map(|row| argmax(row.iter().copied())).collect())
    }
}

/// Index of the largest value; the first one wins on ties.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

fn validate_training_set(
    x: &Array2<f64>,
    y: &[usize],
    n_classes: usize,
) -> Result<(), ModelError> {
    if x.nrows() == 0 {
        return Err(ModelError::EmptyTrainingSet);
    }
    if x.nrows() != y.len() {
        return Err(ModelError::LabelLengthMismatch { rows: x.nrows(), labels: y.len() });
    }
    if n_classes < 2 {
        return Err(ModelError::TooFewClasses(n_classes));
    }
    if let Some(&label) = y.iter().find(|&&c| c >= n_classes) {
        return Err(ModelError::LabelOutOfRange { label, n_classes });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    Ok(())
}

/// Train the classifier selected by `config.kind` on `(x, y)`.
pub fn train_model(
    config: &ModelConfig,
    x: &Array2<f64>,
    y: &[usize],
) -> Result<TrainedModel, ModelError> {
    validate_training_set(x, y, config.n_classes)?;
    let p = &config.params;
    Ok(match config.kind {
        ModelKind::LogisticRegression => {
            TrainedModel::Logistic(train_logistic(&p.logistic, x, y, config.n_classes))
        }
        ModelKind::Svm => TrainedModel::Svm(train_svm(&p.svm, x, y, config.n_classes)),
        ModelKind::DecisionTree => {
            TrainedModel::Tree(train_tree(&p.tree, x, y, config.n_classes))
        }
        ModelKind::RandomForest => {
            TrainedModel::Forest(train_forest(&p.forest, x, y, config.n_classes, config.seed))
        }
        kind => {
            let depth = kind.hidden_layers().expect("network kind");
            let params = NetworkParams { hidden_layers: depth, ..p.network.clone() };
            TrainedModel::Network(train_network(&params, x, y, config.n_classes, config.seed))
        }
    })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema: u32,
    config: ModelConfig,
    config_digest: String,
    model: TrainedModel,
}

const MODEL_SCHEMA: u32 = 1;

/// Write a fitted model plus its config and config digest as JSON.
pub fn save_model(
    path: &Path,
    config: &ModelConfig,
    model: &TrainedModel,
) -> Result<(), ModelError> {
    let file = ModelFile {
        schema: MODEL_SCHEMA,
        config_digest: config.digest(),
        config: config.clone(),
        model: model.clone(),
    };
    let writer = BufWriter::new(File::create(path)?);
    serde_json::to_writer(writer, &file)?;
    Ok(())
}

/// Read a model file back, verifying the stored config digest.
pub fn load_model(path: &Path) -> Result<(ModelConfig, TrainedModel), ModelError> {
    let reader = BufReader::new(File::open(path)?);
    let file: ModelFile = serde_json::from_reader(reader)?;
    let computed = file.config.digest();
    if computed != file.config_digest {
        return Err(ModelError::DigestMismatch { stored: file.config_digest, computed });
    }
    Ok((file.config, file.model))
}
