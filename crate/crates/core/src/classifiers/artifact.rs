//! Trained-model artifacts: a single JSON document with base64 parameter blocks.
//!
//! ```text
//! {"format_version": 1, "kind": "lr", "template": 2, "iteration": 0,
//!  "fingerprint": "<sha256 hex>", "labels": {...}, "input": {...},
//!  "hyperparameters": {...},
//!  "params": {"weights": {"shape": [10, 1024], "data": "<base64 f64 LE>"}, ...}}
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use base64::Engine;
use base64::engine::general_purpose::STANDARD as B64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::backend::{BackendId, EncoderBackend, HASHING_BACKEND_NAME, HashingBackend};
use super::logistic::{LrConfig, OvRLogisticModel, lr_predict, lr_train};
use super::mlp::{MlpHead, MlpTrainConfig, mlp_forward, mlp_train};
use super::naive_bayes::{DEFAULT_ALPHA, NaiveBayesModel, nb_predict, nb_train};
use super::{ClassifierError, Probabilities};
use crate::corpus::{LabelId, LabelRegistry};
use crate::features::{BagFeaturizer, DEFAULT_VOCAB_CAP, FeatureKind, SparseVector, TemplateId};

pub const FORMAT_VERSION: u64 = 1;
pub const DEFAULT_ENCODER_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nb,
    #[default]
    Lr,
    Mlp,
}

impl FromStr for ModelKind {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nb" => Ok(ModelKind::Nb),
            "lr" => Ok(ModelKind::Lr),
            "mlp" => Ok(ModelKind::Mlp),
            _ => Err(ClassifierError::InvalidConfig(format!("unknown model `{s}` (expected nb, lr or mlp)"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Nb => "nb",
            ModelKind::Lr => "lr",
            ModelKind::Mlp => "mlp",
        })
    }
}

/// Everything that determines a trained model besides its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub model: ModelKind,
    /// Bag weighting for nb and lr; ignored by mlp.
    pub features: FeatureKind,
    pub vocab_cap: usize,
    pub nb_alpha: f64,
    pub lr: LrConfig,
    pub mlp: MlpTrainConfig,
    /// Embedding size of the hashing backend used when no backend is supplied.
    pub encoder_dim: usize,
    pub template: TemplateId,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            model: ModelKind::default(),
            features: FeatureKind::default(),
            vocab_cap: DEFAULT_VOCAB_CAP,
            nb_alpha: DEFAULT_ALPHA,
            lr: LrConfig::default(),
            mlp: MlpTrainConfig::default(),
            encoder_dim: DEFAULT_ENCODER_DIM,
            template: TemplateId::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum InputEncoding {
    Bag { featurizer: BagFeaturizer },
    Encoder { backend: BackendId },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    NaiveBayes(NaiveBayesModel),
    Logistic(OvRLogisticModel),
    Mlp(MlpHead),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::NaiveBayes(_) => ModelKind::Nb,
            ModelParams::Logistic(_) => ModelKind::Lr,
            ModelParams::Mlp(_) => ModelKind::Mlp,
        }
    }
}

/// A trained model M⁽ⁱ⁾ together with what is needed to apply it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierArtifact {
    pub params: ModelParams,
    pub input: InputEncoding,
    pub config: TrainerConfig,
    pub labels: LabelRegistry,
    /// Active-learning round that produced this model.
    pub iteration: u32,
    /// sha256 over the training configuration and training data.
    pub fingerprint: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamBlock {
    shape: Vec<usize>,
    data: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArtifactFile {
    format_version: u64,
    kind: ModelKind,
    template: TemplateId,
    iteration: u32,
    fingerprint: String,
    labels: LabelRegistry,
    input: InputEncoding,
    hyperparameters: TrainerConfig,
    params: BTreeMap<String, ParamBlock>,
}

fn encode_block(shape: Vec<usize>, values: impl IntoIterator<Item = f64>) -> ParamBlock {
    let mut bytes = Vec::new();
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    ParamBlock { shape, data: B64.encode(bytes) }
}

fn corrupt(msg: impl Into<String>) -> ClassifierError {
    ClassifierError::CorruptArtifact(msg.into())
}

fn take_block(
    params: &mut BTreeMap<String, ParamBlock>,
    name: &str,
    shape: &[usize],
) -> Result<Vec<f64>, ClassifierError> {
    let block = params.remove(name).ok_or_else(|| corrupt(format!("missing parameter block `{name}`")))?;
    if block.shape != shape {
        return Err(corrupt(format!("block `{name}` has shape {:?}, expected {shape:?}", block.shape)));
    }
    let bytes = B64.decode(block.data.as_bytes()).map_err(|e| corrupt(format!("block `{name}`: {e}")))?;
    let n: usize = shape.iter().product();
    if bytes.len() != n * 8 {
        return Err(corrupt(format!("block `{name}` holds {} bytes, expected {}", bytes.len(), n * 8)));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

fn rows(flat: &[f64], count: usize, width: usize) -> Vec<Vec<f64>> {
    (0..count).map(|r| flat[r * width..(r + 1) * width].to_vec()).collect()
}

impl ClassifierArtifact {
    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    pub fn template(&self) -> TemplateId {
        self.config.template
    }

    fn to_file(&self) -> ArtifactFile {
        let mut params = BTreeMap::new();
        match &self.params {
            ModelParams::NaiveBayes(m) => {
                let k = m.classes();
                params.insert("class_log_prior".into(), encode_block(vec![k], m.class_log_prior.iter().copied()));
                params.insert(
                    "feature_log_prob".into(),
                    encode_block(vec![k, m.dim], m.feature_log_prob.iter().flatten().copied()),
                );
            }
            ModelParams::Logistic(m) => {
                let k = m.classes();
                params.insert("weights".into(), encode_block(vec![k, m.dim], m.weights.iter().flatten().copied()));
                params.insert("biases".into(), encode_block(vec![k], m.biases.iter().copied()));
            }
            ModelParams::Mlp(h) => {
                params.insert("w1".into(), encode_block(vec![h.hidden, h.input_dim], h.w1.iter().copied()));
                params.insert("b1".into(), encode_block(vec![h.hidden], h.b1.iter().copied()));
                params.insert("w2".into(), encode_block(vec![h.classes, h.hidden], h.w2.iter().copied()));
                params.insert("b2".into(), encode_block(vec![h.classes], h.b2.iter().copied()));
            }
        }
        ArtifactFile {
            format_version: FORMAT_VERSION,
            kind: self.kind(),
            template: self.config.template,
            iteration: self.iteration,
            fingerprint: self.fingerprint.clone(),
            labels: self.labels.clone(),
            input: self.input.clone(),
            hyperparameters: self.config.clone(),
            params,
        }
    }

    fn from_file(file: ArtifactFile) -> Result<Self, ClassifierError> {
        let ArtifactFile { kind, iteration, fingerprint, labels, input, hyperparameters, mut params, template, .. } =
            file;
        let k = labels.len();
        let input_dim = match &input {
            InputEncoding::Bag { featurizer } => featurizer.dim(),
            InputEncoding::Encoder { backend } => backend.dim,
        };
        let model = match kind {
            ModelKind::Nb => {
                let prior = take_block(&mut params, "class_log_prior", &[k])?;
                let flp = take_block(&mut params, "feature_log_prob", &[k, input_dim])?;
                ModelParams::NaiveBayes(NaiveBayesModel {
                    alpha: hyperparameters.nb_alpha,
                    dim: input_dim,
                    class_log_prior: prior,
                    feature_log_prob: rows(&flp, k, input_dim),
                })
            }
            ModelKind::Lr => {
                let w = take_block(&mut params, "weights", &[k, input_dim])?;
                let b = take_block(&mut params, "biases", &[k])?;
                ModelParams::Logistic(OvRLogisticModel {
                    dim: input_dim,
                    weights: rows(&w, k, input_dim),
                    biases: b,
                    config: hyperparameters.lr,
                })
            }
            ModelKind::Mlp => {
                let hidden = params.get("b1").and_then(|b| b.shape.first().copied()).unwrap_or(0);
                ModelParams::Mlp(MlpHead {
                    input_dim,
                    hidden,
                    classes: k,
                    w1: take_block(&mut params, "w1", &[hidden, input_dim])?,
                    b1: take_block(&mut params, "b1", &[hidden])?,
                    w2: take_block(&mut params, "w2", &[k, hidden])?,
                    b2: take_block(&mut params, "b2", &[k])?,
                })
            }
        };
        if let Some(extra) = params.keys().next() {
            return Err(corrupt(format!("unexpected parameter block `{extra}`")));
        }
        if matches!((&model, &input), (ModelParams::Mlp(_), InputEncoding::Bag { .. }))
            || matches!((&model, &input), (ModelParams::NaiveBayes(_) | ModelParams::Logistic(_), InputEncoding::Encoder { .. }))
        {
            return Err(corrupt(format!("model kind `{kind}` does not match its input encoding")));
        }
        if hyperparameters.template != template || hyperparameters.model != kind {
            return Err(corrupt("header disagrees with hyperparameters"));
        }
        Ok(ClassifierArtifact { params: model, input, config: hyperparameters, labels, iteration, fingerprint })
    }

    /// Canonical serialized form; identical models give identical bytes.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(&self.to_file()).expect("artifact serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, ClassifierError> {
        let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| corrupt("missing format_version"))?;
        if version != FORMAT_VERSION {
            return Err(ClassifierError::IncompatibleVersion { found: version, expected: FORMAT_VERSION });
        }
        let file: ArtifactFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
        Self::from_file(file)
    }
}

/// Writes through a temporary file and renames, so readers never see a partial artifact.
pub fn save_artifact(artifact: &ClassifierArtifact, path: &Path) -> Result<(), ClassifierError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&artifact.to_json_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_artifact(path: &Path) -> Result<ClassifierArtifact, ClassifierError> {
    ClassifierArtifact::from_json_bytes(&fs::read(path)?)
}

/// An artifact bound to the backend it needs for inference.
#[derive(Clone)]
pub struct Predictor {
    artifact: Arc<ClassifierArtifact>,
    backend: Option<Arc<dyn EncoderBackend>>,
}

impl fmt::Debug for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Predictor")
            .field("kind", &self.artifact.kind())
            .field("iteration", &self.artifact.iteration)
            .field("backend", &self.backend.as_ref().map(|b| b.id()))
            .finish()
    }
}

impl Predictor {
    /// Encoder-based artifacts need a backend of the recorded dimension. The
    /// hashing backend is rebuilt automatically when none is given.
    pub fn new(artifact: ClassifierArtifact, backend: Option<Arc<dyn EncoderBackend>>) -> Result<Self, ClassifierError> {
        let backend = match &artifact.input {
            InputEncoding::Bag { .. } => None,
            InputEncoding::Encoder { backend: want } => {
                let b: Arc<dyn EncoderBackend> = match backend {
                    Some(b) => b,
                    None if want.name == HASHING_BACKEND_NAME => Arc::new(HashingBackend::new(want.dim)?),
                    None => return Err(ClassifierError::MissingBackend(want.name.clone())),
                };
                let got = b.id();
                if got.dim != want.dim {
                    return Err(ClassifierError::DimensionMismatch { expected: want.dim, found: got.dim });
                }
                Some(b)
            }
        };
        Ok(Predictor { artifact: Arc::new(artifact), backend })
    }

    pub fn artifact(&self) -> &ClassifierArtifact {
        &self.artifact
    }

    pub fn labels(&self) -> &LabelRegistry {
        &self.artifact.labels
    }

    /// Bag-feature vector for `text`; `None` for encoder models.
    pub fn bag_features(&self, text: &str) -> Option<SparseVector> {
        match &self.artifact.input {
            InputEncoding::Bag { featurizer } => Some(featurizer.encode(text)),
            InputEncoding::Encoder { .. } => None,
        }
    }

    /// Predicts composed input texts (already cleaned and templated).
    pub fn predict_batch(&self, texts: &[String]) -> Result<Vec<Probabilities>, ClassifierError> {
        match (&self.artifact.params, &self.artifact.input) {
            (ModelParams::NaiveBayes(m), InputEncoding::Bag { featurizer }) => {
                texts.iter().map(|t| nb_predict(m, &featurizer.encode(t))).collect()
            }
            (ModelParams::Logistic(m), InputEncoding::Bag { featurizer }) => {
                texts.iter().map(|t| lr_predict(m, &featurizer.encode(t))).collect()
            }
            (ModelParams::Mlp(head), InputEncoding::Encoder { backend }) => {
                let b = self.backend.as_ref().ok_or_else(|| ClassifierError::MissingBackend(backend.name.clone()))?;
                let embeddings = b.embed_all(texts)?;
                embeddings.iter().map(|e| mlp_forward(head, e)).collect()
            }
            _ => Err(corrupt("model kind does not match its input encoding")),
        }
    }

    pub fn predict(&self, text: &str) -> Result<Probabilities, ClassifierError> {
        let mut out = self.predict_batch(&[text.to_string()])?;
        Ok(out.pop().expect("one prediction per input"))
    }
}

/// sha256 over the canonical config JSON, the backend id, and each training pair.
pub fn fingerprint(config: &TrainerConfig, backend: Option<&BackendId>, examples: &[(String, LabelId)]) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(config).expect("config serializes"));
    h.update(b"\n");
    if let Some(b) = backend {
        h.update(serde_json::to_vec(b).expect("backend id serializes"));
    }
    for (text, label) in examples {
        h.update(b"\n");
        h.update(label.0.to_le_bytes());
        h.update(text.as_bytes());
    }
    hex::encode(h.finalize())
}

pub fn train_classifier(
    config: &TrainerConfig,
    examples: &[(String, LabelId)],
    labels: &LabelRegistry,
    backend: Option<&dyn EncoderBackend>,
    iteration: u32,
) -> Result<ClassifierArtifact, ClassifierError> {
    train_classifier_from(config, examples, labels, backend, iteration, None)
}

/// Like [`train_classifier`]; with `mlp.warm_start` set and a compatible
/// previous MLP artifact, training continues from its head.
pub fn train_classifier_from(
    config: &TrainerConfig,
    examples: &[(String, LabelId)],
    labels: &LabelRegistry,
    backend: Option<&dyn EncoderBackend>,
    iteration: u32,
    previous: Option<&ClassifierArtifact>,
) -> Result<ClassifierArtifact, ClassifierError> {
    if examples.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    let k = labels.len();
    let texts: Vec<&str> = examples.iter().map(|(t, _)| t.as_str()).collect();
    let (params, input, backend_id) = match config.model {
        ModelKind::Nb | ModelKind::Lr => {
            let featurizer = BagFeaturizer::fit(&texts, config.features, config.vocab_cap);
            let xs: Vec<(SparseVector, LabelId)> =
                examples.iter().map(|(t, l)| (featurizer.encode(t), *l)).collect();
            let params = if config.model == ModelKind::Nb {
                ModelParams::NaiveBayes(nb_train(&xs, k, config.nb_alpha)?)
            } else {
                ModelParams::Logistic(lr_train(&xs, k, &config.lr)?)
            };
            (params, InputEncoding::Bag { featurizer }, None)
        }
        ModelKind::Mlp => {
            let owned;
            let backend: &dyn EncoderBackend = match backend {
                Some(b) => b,
                None => {
                    owned = HashingBackend::new(config.encoder_dim)?;
                    &owned
                }
            };
            let id = backend.id();
            let warm = previous.filter(|_| config.mlp.warm_start).and_then(|p| match &p.params {
                ModelParams::Mlp(h) if h.input_dim == id.dim && h.classes == k && h.hidden == config.mlp.hidden => {
                    Some(h.clone())
                }
                _ => None,
            });
            let head = warm.unwrap_or_else(|| MlpHead::init(id.dim, config.mlp.hidden, k, config.mlp.seed));
            let head = mlp_train(head, backend, examples, &config.mlp)?;
            (ModelParams::Mlp(head), InputEncoding::Encoder { backend: id.clone() }, Some(id))
        }
    };
    Ok(ClassifierArtifact {
        params,
        input,
        config: config.clone(),
        labels: labels.clone(),
        iteration,
        fingerprint: fingerprint(config, backend_id.as_ref(), examples),
    })
}
