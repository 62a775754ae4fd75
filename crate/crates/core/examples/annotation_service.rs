//! Drives the annotation service in-process: queue a round, label it, and
//! watch the model iteration advance. Pass `--serve` to expose the same data
//! directory over HTTP on 127.0.0.1:8080 afterwards.

use std::collections::HashMap;

use ticket_triage::builder::SelectionConfig;
use ticket_triage::classifiers::{ModelKind, TrainerConfig};
use ticket_triage::corpus::default_registry;
use ticket_triage::service::{LabelRequest, Service, ServiceConfig, StepRequest, TaskStatus};
use ticket_triage::synthgen::{SynthConfig, generate};

fn main() {
    let labels = default_registry();
    let corpus = generate(&SynthConfig { ticket_count: 600, noise_token_rate: 0.2, seed: 21, ..Default::default() }, &labels).unwrap();
    let dir = tempfile_dir();
    let cfg = ServiceConfig { trainer: TrainerConfig { model: ModelKind::Lr, ..Default::default() }, default_k: 5, ..Default::default() };
    let gold: HashMap<String, String> = corpus
        .iter()
        .map(|t| (t.ticket_id.clone(), labels.name(t.gold_label.unwrap()).unwrap().to_string()))
        .collect();
    let mut svc = Service::create_from_corpus(&dir, &cfg, &labels, &corpus, &SelectionConfig::default(), 150).unwrap();
    println!("data dir {}, health {:?}", dir.display(), svc.health());

    let step = svc.step(&StepRequest::default()).unwrap();
    println!("step: {} with {} tasks", step.status, step.tasks.len());
    for task in svc.queue(Some(TaskStatus::Pending)) {
        println!("  {} conf {:.3} predicted {}: {}", task.task_id, task.confidence, task.predicted, task.description);
        let label = gold[&task.instance_id].clone();
        svc.submit_label(&task.task_id, &LabelRequest { label: Some(label), ..Default::default() }).unwrap();
    }
    println!("after labeling: {:?}, rounds {}", svc.health(), svc.rounds().len());
    println!("latest val macro-F1 {:.3}", svc.latest_metrics().unwrap().macro_f1);

    if std::env::args().any(|a| a == "--serve") {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(ticket_triage::service::serve(svc, "127.0.0.1:8080".parse().unwrap())).unwrap();
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("triage-service-example-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}
