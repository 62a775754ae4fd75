//! Bag-of-words baselines, the MLP head over an encoder backend, and model artifacts.

pub mod artifact;
pub mod backend;
pub mod logistic;
pub mod mlp;
pub mod naive_bayes;

use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LabelId;

pub use artifact::{
    ClassifierArtifact, InputEncoding, ModelKind, ModelParams, Predictor, TrainerConfig, load_artifact,
    save_artifact, train_classifier,
};
pub use backend::{BackendError, BackendId, EncoderBackend, ExternalBackend, HashingBackend};
pub use logistic::{LrConfig, OvRLogisticModel, lr_predict, lr_train};
pub use mlp::{LrSchedule, MlpHead, MlpTrainConfig, Optimizer, mlp_forward, mlp_train};
pub use naive_bayes::{NaiveBayesModel, nb_predict, nb_train};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("artifact format version {found} is not supported (expected {expected})")]
    IncompatibleVersion { found: u64, expected: u64 },
    #[error("corrupt artifact: {0}")]
    CorruptArtifact(String),
    #[error("artifact needs encoder backend `{0}` but none was supplied")]
    MissingBackend(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_labels(labels: impl Iterator<Item = LabelId>, classes: usize) -> Result<(), ClassifierError> {
    if classes == 0 {
        return Err(ClassifierError::InvalidConfig("label count must be at least 1".into()));
    }
    for l in labels {
        if l.0 >= classes {
            return Err(ClassifierError::LabelOutOfRange { label: l.0, classes });
        }
    }
    Ok(())
}

/// Softmax of log-scores via log-sum-exp.
pub fn log_normalize(scores: &[f64]) -> Probabilities {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Probabilities::uniform(scores.len());
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Probabilities(exps.into_iter().map(|e| e / z).collect())
}

/// Distribution over the label registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probabilities(Vec<f64>);

impl Probabilities {
    /// Accepts a vector whose entries are in `[0, 1]` and sum to 1 within 1e-9.
    pub fn new(values: Vec<f64>) -> Option<Self> {
        let sum: f64 = values.iter().sum();
        let ok = !values.is_empty() && values.iter().all(|v| (0.0..=1.0).contains(v)) && (sum - 1.0).abs() <= 1e-9;
        ok.then_some(Probabilities(values))
    }

    pub fn uniform(k: usize) -> Self {
        Probabilities(vec![1.0 / k as f64; k])
    }

    /// `s / sum(s)`, or uniform when the sum is not positive.
    pub fn from_scores(scores: &[f64]) -> Self {
        let sum: f64 = scores.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            Probabilities(scores.iter().map(|s| s / sum).collect())
        } else {
            Self::uniform(scores.len())
        }
    }

    /// First index holding the largest probability.
    pub fn argmax(&self) -> LabelId {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        LabelId(best)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for Probabilities {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
