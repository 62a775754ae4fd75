//! Compares the three input templates when the title carries part of the signal.

use ticket_triage::builder::{SelectionConfig, build_dataset};
use ticket_triage::classifiers::{Predictor, TrainerConfig, train_classifier};
use ticket_triage::corpus::default_registry;
use ticket_triage::evalkit::evaluate;
use ticket_triage::features::{TemplateId, compose_str};
use ticket_triage::synthgen::{SignalPlacement, SynthConfig, generate};

fn main() {
    println!("{}", compose_str(TemplateId::TitleSummaryDesc, "node down", "", "fpga error").unwrap());

    let labels = default_registry();
    let cfg = SynthConfig {
        ticket_count: 2000,
        signal_placement: SignalPlacement::SplitTitleDescription,
        noise_token_rate: 0.3,
        seed: 2,
        ..Default::default()
    };
    let corpus = generate(&cfg, &labels).unwrap();
    for template in [TemplateId::DescOnly, TemplateId::TitleDesc, TemplateId::TitleSummaryDesc] {
        let split = build_dataset(&corpus, &SelectionConfig { template, ..Default::default() }, &labels).unwrap();
        let train: Vec<_> = split.train.iter().map(|e| (e.input_text.clone(), e.label)).collect();
        let test: Vec<_> = split.test.iter().map(|e| (e.input_text.clone(), e.label)).collect();
        let trainer = TrainerConfig { template, ..Default::default() };
        let artifact = train_classifier(&trainer, &train, &labels, None, 0).unwrap();
        let report = evaluate(&Predictor::new(artifact, None).unwrap(), &test, &labels).unwrap();
        println!("template {template}: macro-F1 {:.3}", report.macro_f1);
    }
}
