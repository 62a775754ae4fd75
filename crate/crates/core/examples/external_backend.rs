//! Uses a remote encoder over HTTP. Set `EMBED_ENDPOINT` (and `EMBED_DIM`) to
//! point at a real service; otherwise a local stub that echoes the hashing
//! encoder is started.

use std::sync::Arc;

use axum::{Json, Router, routing::post};
use serde_json::{Value, json};
use ticket_triage::classifiers::{
    EncoderBackend, ExternalBackend, HashingBackend, LrSchedule, MlpTrainConfig, ModelKind, Predictor, TrainerConfig,
    train_classifier,
};
use ticket_triage::corpus::{LabelId, default_registry};

fn start_stub(dim: usize) -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let app = Router::new().route(
                "/embed",
                post(move |Json(body): Json<Value>| async move {
                    let texts: Vec<String> = serde_json::from_value(body["texts"].clone()).unwrap_or_default();
                    let enc = HashingBackend::new(dim).unwrap();
                    let vectors: Vec<Vec<f64>> = texts.iter().map(|t| enc.embed_one(t)).collect();
                    Json(json!({ "dim": dim, "vectors": vectors }))
                }),
            );
            axum::serve(tokio::net::TcpListener::from_std(listener).unwrap(), app).await.unwrap();
        });
    });
    format!("http://{addr}")
}

fn main() {
    let dim: usize = std::env::var("EMBED_DIM").ok().and_then(|d| d.parse().ok()).unwrap_or(256);
    let endpoint = std::env::var("EMBED_ENDPOINT").unwrap_or_else(|_| start_stub(dim));
    let backend: Arc<dyn EncoderBackend> = Arc::new(ExternalBackend::new(&endpoint, dim));
    println!("backend {:?}", backend.id());

    let labels = default_registry();
    let phrases = [("fpga bitstream reprogram", 4), ("firmware bios rollout", 8), ("tpm attestation certificate", 9)];
    let train: Vec<(String, LabelId)> = (0..90)
        .map(|i| {
            let (p, l) = phrases[i % 3];
            (format!("[CLS] host {} reported {p}", i % 11), LabelId(l))
        })
        .collect();
    let trainer = TrainerConfig {
        model: ModelKind::Mlp,
        encoder_dim: dim,
        mlp: MlpTrainConfig { hidden: 64, schedule: LrSchedule { base_lr: 1e-2, ..Default::default() }, ..Default::default() },
        ..Default::default()
    };
    let artifact = train_classifier(&trainer, &train, &labels, Some(backend.as_ref()), 0).unwrap();
    let predictor = Predictor::new(artifact, Some(backend)).unwrap();
    let p = predictor.predict("[CLS] the device needs a bios rollout").unwrap();
    println!("predicted {} ({:.3})", labels.name(p.argmax()).unwrap(), p.max());
}
