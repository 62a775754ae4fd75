//! Multinomial Naive Bayes over sparse feature weights.

use serde::{Deserialize, Serialize};

use super::{ClassifierError, Probabilities, check_labels, log_normalize};
use crate::corpus::LabelId;
use crate::features::SparseVector;

pub const DEFAULT_ALPHA: f64 = 1.0;

/// Feature weights are treated as (possibly fractional) counts, so the same
/// model serves binary BoW and TF-IDF inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub alpha: f64,
    pub dim: usize,
    /// `ln P(class)`, length K.
    pub class_log_prior: Vec<f64>,
    /// `ln P(token | class)`, K rows of length `dim`.
    pub feature_log_prob: Vec<Vec<f64>>,
}

impl NaiveBayesModel {
    pub fn classes(&self) -> usize {
        self.class_log_prior.len()
    }

    /// Unnormalized joint log-likelihood for each class.
    pub fn joint_log_likelihood(&self, x: &SparseVector) -> Result<Vec<f64>, ClassifierError> {
        if x.dim() != self.dim {
            return Err(ClassifierError::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        Ok(self
            .class_log_prior
            .iter()
            .zip(&self.feature_log_prob)
            .map(|(prior, row)| prior + x.iter().map(|(j, w)| w * row[j]).sum::<f64>())
            .collect())
    }
}

/// Add-alpha smoothing on both class priors and per-class token likelihoods.
pub fn nb_train(
    examples: &[(SparseVector, LabelId)],
    classes: usize,
    alpha: f64,
) -> Result<NaiveBayesModel, ClassifierError> {
    let Some((first, _)) = examples.first() else {
        return Err(ClassifierError::EmptyTrainingSet);
    };
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ClassifierError::InvalidConfig(format!("smoothing alpha must be positive, got {alpha}")));
    }
    let dim = first.dim();
    check_labels(examples.iter().map(|(_, l)| *l), classes)?;

    let mut class_count = vec![0.0f64; classes];
    let mut feature_count = vec![vec![0.0f64; dim]; classes];
    for (x, label) in examples {
        if x.dim() != dim {
            return Err(ClassifierError::DimensionMismatch { expected: dim, found: x.dim() });
        }
        class_count[label.0] += 1.0;
        let row = &mut feature_count[label.0];
        for (j, w) in x.iter() {
            row[j] += w;
        }
    }

    let n = examples.len() as f64;
    let k = classes as f64;
    let class_log_prior = class_count.iter().map(|c| ((c + alpha) / (n + k * alpha)).ln()).collect();
    let feature_log_prob = feature_count
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum::<f64>() + alpha * dim as f64;
            row.iter().map(|c| ((c + alpha) / total).ln()).collect()
        })
        .collect();
    Ok(NaiveBayesModel { alpha, dim, class_log_prior, feature_log_prob })
}

/// Posterior computed in log space and normalized.
pub fn nb_predict(model: &NaiveBayesModel, x: &SparseVector) -> Result<Probabilities, ClassifierError> {
    let jll = model.joint_log_likelihood(x)?;
    Ok(log_normalize(&jll))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(dim: usize, idx: &[usize]) -> SparseVector {
        SparseVector::from_pairs(dim, idx.iter().map(|&i| (i, 1.0)))
    }

    #[test]
    fn hand_computed_two_class_example() {
        // vocab {a, b}; class 0 saw "a", class 1 saw "b"
        let model = nb_train(&[(v(2, &[0]), LabelId(0)), (v(2, &[1]), LabelId(1))], 2, 1.0).unwrap();
        assert!((model.feature_log_prob[0][0].exp() - 2.0 / 3.0).abs() < 1e-12);
        assert!((model.feature_log_prob[1][0].exp() - 1.0 / 3.0).abs() < 1e-12);
        let p = nb_predict(&model, &v(2, &[0])).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_input_returns_priors() {
        let data = [(v(3, &[0]), LabelId(0)), (v(3, &[1]), LabelId(0)), (v(3, &[2]), LabelId(1))];
        let model = nb_train(&data, 3, 1.0).unwrap();
        let p = nb_predict(&model, &SparseVector::empty(3)).unwrap();
        // priors (2+1)/(3+3), (1+1)/(3+3), (0+1)/(3+3)
        for (got, want) in p.iter().zip([0.5, 1.0 / 3.0, 1.0 / 6.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_vector_only_moves_priors() {
        let with = nb_train(&[(v(2, &[0]), LabelId(0)), (SparseVector::empty(2), LabelId(1))], 2, 1.0).unwrap();
        assert_eq!(with.feature_log_prob[1], vec![0.5f64.ln(), 0.5f64.ln()]);
        assert_eq!(with.class_log_prior[0], with.class_log_prior[1]);
    }

    #[test]
    fn likelihood_rows_sum_to_one() {
        let data = [(SparseVector::from_pairs(4, [(0, 0.3), (2, 0.7)]), LabelId(0)), (v(4, &[1, 3]), LabelId(2))];
        let model = nb_train(&data, 3, 1.0).unwrap();
        for row in &model.feature_log_prob {
            let s: f64 = row.iter().map(|l| l.exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_class_training_favors_that_class_on_seen_inputs() {
        let docs = [v(3, &[0]), v(3, &[0, 1]), v(3, &[1])];
        let data: Vec<_> = docs.iter().cloned().map(|x| (x, LabelId(1))).collect();
        let model = nb_train(&data, 3, 1.0).unwrap();
        for x in docs.iter().chain([&SparseVector::empty(3)]) {
            let p = nb_predict(&model, x).unwrap();
            assert!(p[1] >= p[0] && p[1] >= p[2], "{p:?}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(nb_train(&[], 2, 1.0), Err(ClassifierError::EmptyTrainingSet)));
        assert!(matches!(
            nb_train(&[(v(2, &[0]), LabelId(5))], 2, 1.0),
            Err(ClassifierError::LabelOutOfRange { .. })
        ));
        let model = nb_train(&[(v(2, &[0]), LabelId(0))], 2, 1.0).unwrap();
        assert!(matches!(nb_predict(&model, &v(3, &[0])), Err(ClassifierError::DimensionMismatch { .. })));
    }
}
