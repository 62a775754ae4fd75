//! One-hidden-layer MLP head over frozen encoder embeddings.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backend::EncoderBackend;
use super::{ClassifierError, Probabilities, check_labels, log_normalize};
use crate::corpus::LabelId;

pub const DEFAULT_HIDDEN: usize = 256;

/// Step decay: the rate is divided by `1/decay` once per boundary reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub decay: f64,
    /// 0-indexed epochs at which the decay is applied.
    pub boundaries: Vec<usize>,
}

impl Default for LrSchedule {
    /// 1e-4, times 0.1 entering epochs 4 and 8 of 12.
    fn default() -> Self {
        LrSchedule { base_lr: 1e-4, decay: 0.1, boundaries: vec![4, 8] }
    }
}

impl LrSchedule {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let steps = self.boundaries.iter().filter(|&&b| epoch >= b).count() as i32;
        // dividing by an integral factor keeps 1e-4 -> 1e-5 -> 1e-6 exact
        self.base_lr / self.decay.recip().powi(steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpTrainConfig {
    pub hidden: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub schedule: LrSchedule,
    pub optimizer: Optimizer,
    pub seed: u64,
    /// Continue from the previous head instead of re-initializing.
    pub warm_start: bool,
}

impl Default for MlpTrainConfig {
    fn default() -> Self {
        MlpTrainConfig {
            hidden: DEFAULT_HIDDEN,
            batch_size: 16,
            epochs: 12,
            schedule: LrSchedule::default(),
            optimizer: Optimizer::default(),
            seed: 0,
            warm_start: false,
        }
    }
}

/// `softmax(W2 · relu(W1 · e + b1) + b2)`. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHead {
    pub input_dim: usize,
    pub hidden: usize,
    pub classes: usize,
    /// hidden × input_dim
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// classes × hidden
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradient with the same layout as [`MlpHead`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpGradient {
    fn zeros(head: &MlpHead) -> Self {
        MlpGradient {
            w1: vec![0.0; head.w1.len()],
            b1: vec![0.0; head.b1.len()],
            w2: vec![0.0; head.w2.len()],
            b2: vec![0.0; head.b2.len()],
        }
    }

    fn scale(&mut self, s: f64) {
        for g in self.w1.iter_mut().chain(&mut self.b1).chain(&mut self.w2).chain(&mut self.b2) {
            *g *= s;
        }
    }
}

struct Activations {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

impl MlpHead {
    pub fn zeros(input_dim: usize, hidden: usize, classes: usize) -> Self {
        MlpHead {
            input_dim,
            hidden,
            classes,
            w1: vec![0.0; hidden * input_dim],
            b1: vec![0.0; hidden],
            w2: vec![0.0; classes * hidden],
            b2: vec![0.0; classes],
        }
    }

    /// He-uniform weights for the ReLU layer, Glorot-uniform for the output, zero biases.
    pub fn init(input_dim: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut head = Self::zeros(input_dim, hidden, classes);
        let a1 = (6.0 / input_dim.max(1) as f64).sqrt();
        for w in &mut head.w1 {
            *w = rng.random_range(-a1..a1);
        }
        let a2 = (6.0 / (hidden + classes).max(1) as f64).sqrt();
        for w in &mut head.w2 {
            *w = rng.random_range(-a2..a2);
        }
        head
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).all(|v| v.is_finite())
    }

    fn check_input(&self, e: &[f64]) -> Result<(), ClassifierError> {
        if e.len() != self.input_dim {
            return Err(ClassifierError::DimensionMismatch { expected: self.input_dim, found: e.len() });
        }
        Ok(())
    }

    fn activations(&self, e: &[f64]) -> Activations {
        let nz: Vec<(usize, f64)> = e.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect();
        let d = self.input_dim;
        let pre: Vec<f64> = (0..self.hidden)
            .map(|i| {
                let row = &self.w1[i * d..(i + 1) * d];
                self.b1[i] + nz.iter().map(|&(j, v)| row[j] * v).sum::<f64>()
            })
            .collect();
        let hidden: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        let logits = (0..self.classes)
            .map(|k| {
                let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
                self.b2[k] + row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>()
            })
            .collect();
        Activations { pre, hidden, logits }
    }

    pub fn logits(&self, e: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        self.check_input(e)?;
        Ok(self.activations(e).logits)
    }

    /// Cross-entropy of one example and its gradient w.r.t. every parameter.
    pub fn loss_and_gradient(&self, e: &[f64], label: LabelId) -> Result<(f64, MlpGradient), ClassifierError> {
        self.check_input(e)?;
        let mut grad = MlpGradient::zeros(self);
        let loss = self.accumulate_gradient(e, label, &mut grad);
        Ok((loss, grad))
    }

    fn accumulate_gradient(&self, e: &[f64], label: LabelId, grad: &mut MlpGradient) -> f64 {
        let act = self.activations(e);
        let probs = log_normalize(&act.logits);
        let loss = -probs[label.0].max(f64::MIN_POSITIVE).ln();
        let d = self.input_dim;
        let h = self.hidden;
        let mut d_hidden = vec![0.0; h];
        for k in 0..self.classes {
            let dz = probs[k] - if k == label.0 { 1.0 } else { 0.0 };
            grad.b2[k] += dz;
            let row = &self.w2[k * h..(k + 1) * h];
            let grow = &mut grad.w2[k * h..(k + 1) * h];
            for i in 0..h {
                grow[i] += dz * act.hidden[i];
                d_hidden[i] += dz * row[i];
            }
        }
        for (i, (&pre, &dz)) in act.pre.iter().zip(&d_hidden).enumerate() {
            if pre <= 0.0 {
                continue;
            }
            grad.b1[i] += dz;
            let grow = &mut grad.w1[i * d..(i + 1) * d];
            for (j, &v) in e.iter().enumerate() {
                if v != 0.0 {
                    grow[j] += dz * v;
                }
            }
        }
        loss
    }

    /// Mean cross-entropy over a labeled set.
    pub fn mean_loss(&self, data: &[(Vec<f64>, LabelId)]) -> Result<f64, ClassifierError> {
        let mut total = 0.0;
        for (e, y) in data {
            let p = mlp_forward(self, e)?;
            total -= p[y.0].max(f64::MIN_POSITIVE).ln();
        }
        Ok(total / data.len().max(1) as f64)
    }

    fn params_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

pub fn mlp_forward(head: &MlpHead, e: &[f64]) -> Result<Probabilities, ClassifierError> {
    Ok(log_normalize(&head.logits(e)?))
}

struct AdamState {
    m: [Vec<f64>; 4],
    v: [Vec<f64>; 4],
    t: i32,
}

fn apply_update(head: &mut MlpHead, grad: &MlpGradient, lr: f64, optimizer: &Optimizer, state: &mut AdamState) {
    let grads = [&grad.w1, &grad.b1, &grad.w2, &grad.b2];
    match *optimizer {
        Optimizer::Sgd => {
            for (p, g) in head.params_mut().into_iter().zip(grads) {
                for (pi, gi) in p.iter_mut().zip(g) {
                    *pi -= lr * gi;
                }
            }
        }
        Optimizer::Adam { beta1, beta2, eps } => {
            state.t += 1;
            let c1 = 1.0 - beta1.powi(state.t);
            let c2 = 1.0 - beta2.powi(state.t);
            for (slot, (p, g)) in head.params_mut().into_iter().zip(grads).enumerate() {
                let (m, v) = (&mut state.m[slot], &mut state.v[slot]);
                for i in 0..p.len() {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                }
            }
        }
    }
}

/// Mini-batch training of the head on precomputed embeddings.
pub fn train_head_on_embeddings(
    mut head: MlpHead,
    data: &[(Vec<f64>, LabelId)],
    config: &MlpTrainConfig,
) -> Result<MlpHead, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if config.batch_size == 0 {
        return Err(ClassifierError::InvalidConfig("batch_size must be at least 1".into()));
    }
    check_labels(data.iter().map(|(_, l)| *l), head.classes)?;
    for (e, _) in data {
        head.check_input(e)?;
    }
    let zeros = |h: &MlpHead| [vec![0.0; h.w1.len()], vec![0.0; h.b1.len()], vec![0.0; h.w2.len()], vec![0.0; h.b2.len()]];
    let mut state = AdamState { m: zeros(&head), v: zeros(&head), t: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_ba7c);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..config.epochs {
        let lr = config.schedule.lr_at(epoch);
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grad = MlpGradient::zeros(&head);
            for &i in batch {
                let (e, y) = &data[i];
                head.accumulate_gradient(e, *y, &mut grad);
            }
            grad.scale(1.0 / batch.len() as f64);
            apply_update(&mut head, &grad, lr, &config.optimizer, &mut state);
        }
    }
    Ok(head)
}

/// Embeds every text with the frozen backend, then trains the head.
pub fn mlp_train(
    head: MlpHead,
    backend: &dyn EncoderBackend,
    examples: &[(String, LabelId)],
    config: &MlpTrainConfig,
) -> Result<MlpHead, ClassifierError> {
    if examples.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    let id = backend.id();
    if id.dim != head.input_dim {
        return Err(ClassifierError::DimensionMismatch { expected: head.input_dim, found: id.dim });
    }
    let texts: Vec<String> = examples.iter().map(|(t, _)| t.clone()).collect();
    let embeddings = backend.embed_all(&texts)?;
    let data: Vec<(Vec<f64>, LabelId)> = embeddings.into_iter().zip(examples.iter().map(|(_, l)| *l)).collect();
    train_head_on_embeddings(head, &data, config)
}
