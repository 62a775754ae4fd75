//! Least-confidence versus random sampling with a simulated annotator.

use std::collections::HashMap;

use ticket_triage::active::{ActiveLearner, Instance, LabeledInstance, PoolState, Sampler, SimulatedOracle};
use ticket_triage::builder::{SelectionConfig, build_dataset};
use ticket_triage::classifiers::TrainerConfig;
use ticket_triage::corpus::default_registry;
use ticket_triage::synthgen::{SynthConfig, generate};

fn main() {
    let labels = default_registry();
    let corpus = generate(&SynthConfig { ticket_count: 2500, noise_token_rate: 0.15, seed: 6, ..Default::default() }, &labels).unwrap();
    let split = build_dataset(&corpus, &SelectionConfig { seed: 6, ..Default::default() }, &labels).unwrap();
    let validation: Vec<_> = split.val.iter().chain(&split.test).map(|e| (e.input_text.clone(), e.label)).collect();

    for sampler in [Sampler::LeastConfident, Sampler::Random] {
        let (seed, pool) = split.train.split_at(100);
        let labeled = seed.iter().map(|e| LabeledInstance { id: e.ticket_id.clone(), text: e.input_text.clone(), label: e.label }).collect();
        let unlabeled = pool.iter().map(|e| Instance { id: e.ticket_id.clone(), text: e.input_text.clone() }).collect();
        let gold: HashMap<_, _> = pool.iter().map(|e| (e.ticket_id.clone(), e.label)).collect();
        let mut oracle = SimulatedOracle::new(gold);
        let state = PoolState::new(labeled, unlabeled).unwrap();
        let mut learner = ActiveLearner::new(state, TrainerConfig::default(), labels.clone(), validation.clone(), 6);

        let r0 = learner.fit_initial().unwrap();
        let mut curve = vec![format!("{:.3}", r0.val_macro_f1)];
        for _ in 0..8 {
            let r = learner.step(sampler, 32, &mut oracle).unwrap();
            curve.push(format!("{:.3}", r.val_macro_f1));
        }
        println!("{sampler}: {}", curve.join(" "));
    }
}
