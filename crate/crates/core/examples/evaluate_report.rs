//! Full evaluation report: macro scores, per-class CSV and curves.

use ticket_triage::builder::{SelectionConfig, build_dataset};
use ticket_triage::classifiers::{ModelKind, Predictor, TrainerConfig, train_classifier};
use ticket_triage::corpus::default_registry;
use ticket_triage::evalkit::{evaluate, pr_curves_csv, roc_curves_csv};
use ticket_triage::synthgen::{SynthConfig, generate};

fn main() {
    let labels = default_registry();
    let corpus = generate(&SynthConfig { ticket_count: 1000, noise_token_rate: 0.25, seed: 12, ..Default::default() }, &labels).unwrap();
    let split = build_dataset(&corpus, &SelectionConfig::default(), &labels).unwrap();
    let train: Vec<_> = split.train.iter().map(|e| (e.input_text.clone(), e.label)).collect();
    let test: Vec<_> = split.test.iter().map(|e| (e.input_text.clone(), e.label)).collect();

    let trainer = TrainerConfig { model: ModelKind::Nb, ..Default::default() };
    let predictor = Predictor::new(train_classifier(&trainer, &train, &labels, None, 0).unwrap(), None).unwrap();
    let report = evaluate(&predictor, &test, &labels).unwrap();
    println!(
        "P {:.4} R {:.4} F1 {:.4} AUC {:?} AUPRC {:?}",
        report.macro_precision, report.macro_recall, report.macro_f1, report.macro_auc, report.macro_auprc
    );
    print!("{}", report.per_class_csv());

    let texts: Vec<String> = test.iter().map(|(t, _)| t.clone()).collect();
    let golds: Vec<_> = test.iter().map(|(_, l)| *l).collect();
    let probs = predictor.predict_batch(&texts).unwrap();
    let roc = roc_curves_csv(&golds, &probs, &labels).unwrap();
    let pr = pr_curves_csv(&golds, &probs, &labels).unwrap();
    println!("roc.csv: {} rows, pr.csv: {} rows", roc.lines().count() - 1, pr.lines().count() - 1);
}
