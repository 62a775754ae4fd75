//! Classification metrics and report emitters.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{ClassifierError, Predictor, Probabilities};
use crate::corpus::{LabelId, LabelRegistry};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {golds} gold labels vs {preds} predictions")]
    LengthMismatch { golds: usize, preds: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("model labels do not match the evaluation data: {0}")]
    RegistryMismatch(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// K×K counts, rows gold, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        ConfusionMatrix { counts: vec![vec![0; k]; k] }
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold][pred]
    }
}

pub fn confusion(golds: &[LabelId], preds: &[LabelId], k: usize) -> Result<ConfusionMatrix, EvalError> {
    if golds.len() != preds.len() {
        return Err(EvalError::LengthMismatch { golds: golds.len(), preds: preds.len() });
    }
    let mut cm = ConfusionMatrix::zeros(k);
    for (g, p) in golds.iter().zip(preds) {
        for l in [g, p] {
            if l.0 >= k {
                return Err(EvalError::LabelOutOfRange { label: l.0, classes: k });
            }
        }
        cm.counts[g.0][p.0] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 { num / den } else { 0.0 }
}

/// Per-class scores; a zero denominator scores 0.
pub fn per_class_prf(cm: &ConfusionMatrix) -> Vec<Prf> {
    let k = cm.classes();
    (0..k)
        .map(|c| {
            let tp = cm.counts[c][c] as f64;
            let predicted: f64 = (0..k).map(|g| cm.counts[g][c] as f64).sum();
            let actual: f64 = cm.counts[c].iter().sum::<u64>() as f64;
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            Prf { precision, recall, f1: ratio(2.0 * precision * recall, precision + recall) }
        })
        .collect()
}

/// Unweighted means of the per-class scores over all K classes.
pub fn macro_prf(cm: &ConfusionMatrix) -> Prf {
    let per = per_class_prf(cm);
    let k = per.len().max(1) as f64;
    Prf {
        precision: per.iter().map(|p| p.precision).sum::<f64>() / k,
        recall: per.iter().map(|p| p.recall).sum::<f64>() / k,
        f1: per.iter().map(|p| p.f1).sum::<f64>() / k,
    }
}

/// One-vs-rest scores; classes lacking positives or negatives are `None`
/// and left out of the macro mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrScores {
    pub per_class: Vec<Option<f64>>,
    pub macro_score: Option<f64>,
    pub undefined: Vec<usize>,
}

impl OvrScores {
    fn from_per_class(per_class: Vec<Option<f64>>) -> Self {
        let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
        let undefined = per_class.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(i, _)| i).collect();
        let macro_score = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        OvrScores { per_class, macro_score, undefined }
    }
}

/// Mann-Whitney statistic with average ranks for ties.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&o| positive[o]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Thresholds in descending order, each with cumulative (tp, fp) counts.
fn descending_steps(scores: &[f64], positive: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut steps = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        steps.push((t, tp, fp));
    }
    steps
}

/// Step-wise average precision: sum over thresholds of (ΔR)·P.
pub fn average_precision(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    if n_pos == 0 {
        return None;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (_, tp, fp) in descending_steps(scores, positive) {
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}

fn check_lengths(golds: &[LabelId], probs: &[Probabilities]) -> Result<usize, EvalError> {
    if golds.len() != probs.len() {
        return Err(EvalError::LengthMismatch { golds: golds.len(), preds: probs.len() });
    }
    let k = probs.first().map_or(0, |p| p.len());
    for p in probs {
        if p.len() != k {
            return Err(EvalError::LengthMismatch { golds: k, preds: p.len() });
        }
    }
    for g in golds {
        if g.0 >= k {
            return Err(EvalError::LabelOutOfRange { label: g.0, classes: k });
        }
    }
    Ok(k)
}

fn ovr(
    golds: &[LabelId],
    probs: &[Probabilities],
    score: fn(&[f64], &[bool]) -> Option<f64>,
) -> Result<OvrScores, EvalError> {
    let k = check_lengths(golds, probs)?;
    let per_class = (0..k)
        .map(|c| {
            let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
            let positive: Vec<bool> = golds.iter().map(|g| g.0 == c).collect();
            score(&scores, &positive)
        })
        .collect();
    Ok(OvrScores::from_per_class(per_class))
}

pub fn roc_auc_ovr(golds: &[LabelId], probs: &[Probabilities]) -> Result<OvrScores, EvalError> {
    ovr(golds, probs, binary_auc)
}

pub fn aupr_ovr(golds: &[LabelId], probs: &[Probabilities]) -> Result<OvrScores, EvalError> {
    ovr(golds, probs, |s, p| {
        let has_neg = p.iter().any(|&x| !x);
        average_precision(s, p).filter(|_| has_neg)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// ROC points starting from (0, 0) at threshold +inf.
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Vec<RocPoint> {
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let mut pts = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    for (t, tp, fp) in descending_steps(scores, positive) {
        pts.push(RocPoint { threshold: t, fpr: ratio(fp as f64, n_neg), tpr: ratio(tp as f64, n_pos) });
    }
    pts
}

pub fn pr_curve(scores: &[f64], positive: &[bool]) -> Vec<PrPoint> {
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    descending_steps(scores, positive)
        .into_iter()
        .map(|(t, tp, fp)| PrPoint {
            threshold: t,
            recall: ratio(tp as f64, n_pos),
            precision: ratio(tp as f64, (tp + fp) as f64),
        })
        .collect()
}

/// Per-class curve points for every class, as `label,threshold,fpr,tpr`.
pub fn roc_curves_csv(golds: &[LabelId], probs: &[Probabilities], labels: &LabelRegistry) -> Result<String, EvalError> {
    let k = check_lengths(golds, probs)?;
    let mut out = String::from("label,threshold,fpr,tpr\n");
    for c in 0..k {
        let (scores, positive) = class_columns(golds, probs, c);
        for p in roc_curve(&scores, &positive) {
            let _ = writeln!(out, "{},{},{},{}", label_name(labels, c), p.threshold, p.fpr, p.tpr);
        }
    }
    Ok(out)
}

/// Per-class curve points for every class, as `label,threshold,recall,precision`.
pub fn pr_curves_csv(golds: &[LabelId], probs: &[Probabilities], labels: &LabelRegistry) -> Result<String, EvalError> {
    let k = check_lengths(golds, probs)?;
    let mut out = String::from("label,threshold,recall,precision\n");
    for c in 0..k {
        let (scores, positive) = class_columns(golds, probs, c);
        for p in pr_curve(&scores, &positive) {
            let _ = writeln!(out, "{},{},{},{}", label_name(labels, c), p.threshold, p.recall, p.precision);
        }
    }
    Ok(out)
}

fn class_columns(golds: &[LabelId], probs: &[Probabilities], c: usize) -> (Vec<f64>, Vec<bool>) {
    (probs.iter().map(|p| p[c]).collect(), golds.iter().map(|g| g.0 == c).collect())
}

fn label_name(labels: &LabelRegistry, c: usize) -> String {
    labels.name(LabelId(c)).map_or_else(|| c.to_string(), str::to_string)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub label: String,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    pub auprc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub examples: usize,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub macro_auc: Option<f64>,
    pub macro_auprc: Option<f64>,
    pub per_class: Vec<ClassReport>,
    /// Labels whose AUC is undefined on this set.
    pub undefined_auc: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub model_fingerprint: String,
    pub model_iteration: u32,
}

/// Builds a report from gold labels and predicted distributions.
pub fn report_from_predictions(
    golds: &[LabelId],
    probs: &[Probabilities],
    labels: &LabelRegistry,
) -> Result<EvalReport, EvalError> {
    if golds.len() != probs.len() {
        return Err(EvalError::LengthMismatch { golds: golds.len(), preds: probs.len() });
    }
    let k = labels.len();
    if let Some(p) = probs.iter().find(|p| p.len() != k) {
        return Err(EvalError::RegistryMismatch(format!("{} labels, model emits {}", k, p.len())));
    }
    let preds: Vec<LabelId> = probs.iter().map(Probabilities::argmax).collect();
    let cm = confusion(golds, &preds, k)?;
    let per = per_class_prf(&cm);
    let mac = macro_prf(&cm);
    let (auc, auprc) = if probs.is_empty() {
        let none = OvrScores::from_per_class(vec![None; k]);
        (none.clone(), none)
    } else {
        (roc_auc_ovr(golds, probs)?, aupr_ovr(golds, probs)?)
    };
    let per_class = (0..k)
        .map(|c| ClassReport {
            label: label_name(labels, c),
            support: cm.counts[c].iter().sum(),
            precision: per[c].precision,
            recall: per[c].recall,
            f1: per[c].f1,
            auc: auc.per_class[c],
            auprc: auprc.per_class[c],
        })
        .collect();
    Ok(EvalReport {
        examples: golds.len(),
        macro_precision: mac.precision,
        macro_recall: mac.recall,
        macro_f1: mac.f1,
        macro_auc: auc.macro_score,
        macro_auprc: auprc.macro_score,
        per_class,
        undefined_auc: auc.undefined.iter().map(|&c| label_name(labels, c)).collect(),
        confusion: cm,
        model_fingerprint: String::new(),
        model_iteration: 0,
    })
}

/// Predicts every `(input_text, gold)` pair and assembles the report.
/// `labels` is the registry the gold ids refer to.
pub fn evaluate(
    predictor: &Predictor,
    examples: &[(String, LabelId)],
    labels: &LabelRegistry,
) -> Result<EvalReport, EvalError> {
    let model_labels = predictor.labels();
    if model_labels.names() != labels.names() {
        return Err(EvalError::RegistryMismatch(format!(
            "model has {} labels, data has {}",
            model_labels.len(),
            labels.len()
        )));
    }
    let texts: Vec<String> = examples.iter().map(|(t, _)| t.clone()).collect();
    let golds: Vec<LabelId> = examples.iter().map(|(_, l)| *l).collect();
    let probs = if texts.is_empty() { Vec::new() } else { predictor.predict_batch(&texts)? };
    let mut report = report_from_predictions(&golds, &probs, labels)?;
    report.model_fingerprint = predictor.artifact().fingerprint.clone();
    report.model_iteration = predictor.artifact().iteration;
    Ok(report)
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(String::new, |x| format!("{x:.decimals$}"))
}

impl EvalReport {
    /// `label,precision,recall,f1,auc`, one row per class.
    pub fn per_class_csv(&self) -> String {
        let mut out = String::from("label,precision,recall,f1,auc\n");
        for c in &self.per_class {
            let _ = writeln!(out, "{},{:.4},{:.4},{:.4},{}", c.label, c.precision, c.recall, c.f1, opt(c.auc, 4));
        }
        out
    }

    /// Results-table row: P/R/F1 as percentages with two decimals, AUC as a fraction.
    pub fn table_row(&self, model: &str) -> String {
        format!(
            "{model},{:.2},{:.2},{:.2},{}",
            self.macro_precision * 100.0,
            self.macro_recall * 100.0,
            self.macro_f1 * 100.0,
            opt(self.macro_auc, 3)
        )
    }

    pub const TABLE_HEADER: &'static str = "model,precision,recall,f1,auc";

    pub fn write_json(&self, path: &Path) -> Result<(), EvalError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        fs::write(path, bytes)?;
        Ok(())
    }
}
