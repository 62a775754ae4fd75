//! One-vs-rest logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::{ClassifierError, Probabilities, check_labels};
use crate::corpus::LabelId;
use crate::features::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LrConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty on weights (the bias is not penalized).
    pub l2: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig { learning_rate: 0.5, epochs: 300, l2: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvRLogisticModel {
    pub dim: usize,
    /// K rows of length `dim`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub config: LrConfig,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() }
}

/// Mean binary log-loss plus `l2/2 * |w|^2`, with its gradient.
///
/// Returns `(loss, d loss / d w, d loss / d b)`.
pub fn binary_objective(
    weights: &[f64],
    bias: f64,
    xs: &[SparseVector],
    positive: &[bool],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = xs.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (x, &y) in xs.iter().zip(positive) {
        let z = x.dot(weights) + bias;
        // -[y ln s + (1-y) ln(1-s)] = softplus(z) - y z
        loss += softplus(z) - if y { z } else { 0.0 };
        let r = sigmoid(z) - if y { 1.0 } else { 0.0 };
        for (j, v) in x.iter() {
            grad_w[j] += r * v;
        }
        grad_b += r;
    }
    loss /= n;
    grad_b /= n;
    let mut penalty = 0.0;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
        penalty += w * w;
    }
    (loss + 0.5 * l2 * penalty, grad_w, grad_b)
}

/// Trains K independent binary models from zero-initialized weights.
pub fn lr_train(
    examples: &[(SparseVector, LabelId)],
    classes: usize,
    config: &LrConfig,
) -> Result<OvRLogisticModel, ClassifierError> {
    let Some((first, _)) = examples.first() else {
        return Err(ClassifierError::EmptyTrainingSet);
    };
    let dim = first.dim();
    check_labels(examples.iter().map(|(_, l)| *l), classes)?;
    if let Some((x, _)) = examples.iter().find(|(x, _)| x.dim() != dim) {
        return Err(ClassifierError::DimensionMismatch { expected: dim, found: x.dim() });
    }
    let xs: Vec<SparseVector> = examples.iter().map(|(x, _)| x.clone()).collect();
    let mut weights = vec![vec![0.0; dim]; classes];
    let mut biases = vec![0.0; classes];
    for class in 0..classes {
        let positive: Vec<bool> = examples.iter().map(|(_, l)| l.0 == class).collect();
        let (w, b) = (&mut weights[class], &mut biases[class]);
        for _ in 0..config.epochs {
            let (_, gw, gb) = binary_objective(w, *b, &xs, &positive, config.l2);
            for (wi, gi) in w.iter_mut().zip(&gw) {
                *wi -= config.learning_rate * gi;
            }
            *b -= config.learning_rate * gb;
        }
    }
    Ok(OvRLogisticModel { dim, weights, biases, config: *config })
}

impl OvRLogisticModel {
    pub fn classes(&self) -> usize {
        self.biases.len()
    }

    /// Per-class sigmoid scores before normalization.
    pub fn scores(&self, x: &SparseVector) -> Result<Vec<f64>, ClassifierError> {
        if x.dim() != self.dim {
            return Err(ClassifierError::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        Ok(self.weights.iter().zip(&self.biases).map(|(w, b)| sigmoid(x.dot(w) + b)).collect())
    }
}

/// Normalizes the one-vs-rest sigmoid scores into a distribution.
pub fn lr_predict(model: &OvRLogisticModel, x: &SparseVector) -> Result<Probabilities, ClassifierError> {
    Ok(Probabilities::from_scores(&model.scores(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(dim: usize, pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_pairs(dim, pairs.iter().copied())
    }

    #[test]
    fn zero_epochs_is_uniform() {
        let data = [(v(2, &[(0, 1.0)]), LabelId(0)), (v(2, &[(1, 1.0)]), LabelId(1))];
        let model = lr_train(&data, 3, &LrConfig { epochs: 0, ..Default::default() }).unwrap();
        assert!(model.weights.iter().flatten().all(|&w| w == 0.0));
        let p = lr_predict(&model, &v(2, &[(0, 1.0)])).unwrap();
        assert!(p.iter().all(|&q| (q - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn separable_toy_set() {
        let data = [(v(2, &[(0, 1.0)]), LabelId(0)), (v(2, &[(1, 1.0)]), LabelId(1))];
        let model = lr_train(&data, 2, &LrConfig { epochs: 500, ..Default::default() }).unwrap();
        for (x, y) in &data {
            assert_eq!(lr_predict(&model, x).unwrap().argmax(), *y);
        }
    }

    #[test]
    fn two_class_normalization() {
        let p = Probabilities::from_scores(&[0.9, 0.1]);
        assert!((p[0] - 0.9).abs() < 1e-12 && (p[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn bias_is_not_penalized() {
        let (loss0, _, _) = binary_objective(&[0.0], 3.0, &[], &[], 10.0);
        assert_eq!(loss0, 0.0);
        let (_, gw, _) = binary_objective(&[2.0], 0.0, &[], &[], 0.5);
        assert_eq!(gw, vec![1.0]);
    }

    #[test]
    fn dimension_checks() {
        let data = [(v(2, &[(0, 1.0)]), LabelId(0)), (v(3, &[(1, 1.0)]), LabelId(1))];
        assert!(matches!(lr_train(&data, 2, &LrConfig::default()), Err(ClassifierError::DimensionMismatch { .. })));
        assert!(matches!(lr_train(&[], 2, &LrConfig::default()), Err(ClassifierError::EmptyTrainingSet)));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
    }
}
