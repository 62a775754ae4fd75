//! Trains the classification head over the hashing encoder and saves the artifact.

use ticket_triage::builder::{SelectionConfig, build_dataset};
use ticket_triage::classifiers::{
    LrSchedule, MlpTrainConfig, ModelKind, Predictor, TrainerConfig, load_artifact, save_artifact, train_classifier,
};
use ticket_triage::corpus::default_registry;
use ticket_triage::evalkit::evaluate;
use ticket_triage::synthgen::{SynthConfig, generate};

fn main() {
    let labels = default_registry();
    let corpus = generate(&SynthConfig { ticket_count: 1500, noise_token_rate: 0.1, seed: 4, ..Default::default() }, &labels).unwrap();
    let split = build_dataset(&corpus, &SelectionConfig::default(), &labels).unwrap();
    let train: Vec<_> = split.train.iter().map(|e| (e.input_text.clone(), e.label)).collect();
    let test: Vec<_> = split.test.iter().map(|e| (e.input_text.clone(), e.label)).collect();

    let defaults = MlpTrainConfig::default();
    println!("default schedule: {:?}", (0..defaults.epochs).map(|e| defaults.schedule.lr_at(e)).collect::<Vec<_>>());
    // a fresh head over hashing features wants a larger step than encoder fine-tuning
    let trainer = TrainerConfig {
        model: ModelKind::Mlp,
        mlp: MlpTrainConfig { schedule: LrSchedule { base_lr: 1e-3, ..Default::default() }, ..defaults },
        ..Default::default()
    };
    let artifact = train_classifier(&trainer, &train, &labels, None, 0).unwrap();
    let path = std::env::temp_dir().join("triage-mlp-artifact.json");
    save_artifact(&artifact, &path).unwrap();
    println!("saved {} ({} bytes), fingerprint {}", path.display(), std::fs::metadata(&path).unwrap().len(), artifact.fingerprint);

    let predictor = Predictor::new(load_artifact(&path).unwrap(), None).unwrap();
    let report = evaluate(&predictor, &test, &labels).unwrap();
    println!("test macro-F1 {:.3}, macro AUC {:?}", report.macro_f1, report.macro_auc);
}
