//! Naive Bayes and logistic regression over bag-of-words and TF-IDF.

use ticket_triage::builder::{SelectionConfig, build_dataset};
use ticket_triage::classifiers::{ModelKind, Predictor, TrainerConfig, train_classifier};
use ticket_triage::corpus::default_registry;
use ticket_triage::evalkit::{EvalReport, evaluate};
use ticket_triage::features::FeatureKind;
use ticket_triage::synthgen::{SynthConfig, generate};

fn main() {
    let labels = default_registry();
    let cfg = SynthConfig { ticket_count: 2000, noise_token_rate: 0.2, seed: 8, ..Default::default() };
    let corpus = generate(&cfg, &labels).unwrap();
    let split = build_dataset(&corpus, &SelectionConfig::default(), &labels).unwrap();
    let pairs = |ex: &[ticket_triage::builder::Example]| ex.iter().map(|e| (e.input_text.clone(), e.label)).collect::<Vec<_>>();
    let (train, test) = (pairs(&split.train), pairs(&split.test));

    println!("{}", EvalReport::TABLE_HEADER);
    for model in [ModelKind::Nb, ModelKind::Lr] {
        for features in [FeatureKind::Bow, FeatureKind::Tfidf] {
            let trainer = TrainerConfig { model, features, ..Default::default() };
            let artifact = train_classifier(&trainer, &train, &labels, None, 0).unwrap();
            let report = evaluate(&Predictor::new(artifact, None).unwrap(), &test, &labels).unwrap();
            println!("{}", report.table_row(&format!("{model}-{features}")));
        }
    }
}
