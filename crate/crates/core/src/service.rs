//! HTTP annotation service over a file-backed journal.
//!
//! Data directory layout:
//!
//! ```text
//! service.json              ServiceConfig
//! labels.txt                label registry, one name per line
//! tickets.jsonl             seed / pool / validation tickets
//! tasks.jsonl               task created / resolved events
//! rounds.jsonl              one RoundRecord per completed round
//! metrics.jsonl             one EvalReport per trained model
//! artifacts/artifact-{i}.json
//! ```
//!
//! Every state change is appended to a journal before it becomes visible, and
//! opening a directory replays the journals. A torn final line (from a crash
//! mid-write) is discarded.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::active::{
    ActiveError, ActiveLearner, Instance, LabeledInstance, OracleAnswer, PoolState, QueryBatch, QueryItem,
    RoundRecord, Sampler, apply_answers,
};
use crate::builder::{BuildError, SelectionConfig, build_dataset};
use crate::classifiers::{ClassifierError, Predictor, TrainerConfig, load_artifact};
use crate::corpus::{CorpusError, LabelId, LabelRegistry, RawTicket};
use crate::evalkit::EvalReport;
use crate::features::{FeatureError, TemplateId, compose};
use crate::preprocess::clean;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no model loaded")]
    NoModelLoaded,
    #[error("description is empty")]
    EmptyDescription,
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task `{0}` is already resolved")]
    AlreadyResolved(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("a round is awaiting annotations")]
    StepInProgress,
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("journal `{file}` line {line}: {reason}")]
    CorruptJournal { file: String, line: usize, reason: String },
    #[error(transparent)]
    Active(#[from] ActiveError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NoModelLoaded | ServiceError::AlreadyResolved(_) | ServiceError::StepInProgress => {
                StatusCode::CONFLICT
            }
            ServiceError::EmptyDescription | ServiceError::UnknownLabel(_) | ServiceError::BadRequest(_) => {
                StatusCode::BAD_REQUEST
            }
            ServiceError::UnknownTask(_) => StatusCode::NOT_FOUND,
            ServiceError::Active(ActiveError::EmptyPool | ActiveError::InvalidBatchSize) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    pub trainer: TrainerConfig,
    pub seed: u64,
    pub default_k: usize,
    pub default_sampler: Sampler,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            trainer: TrainerConfig::default(),
            seed: 0,
            default_k: crate::active::DEFAULT_BATCH_SIZE,
            default_sampler: Sampler::LeastConfident,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TicketRole {
    /// Labeled from the start (L⁽⁰⁾).
    Seed,
    /// Unlabeled pool U; the gold label, if any, only feeds the simulated oracle.
    Pool,
    /// Fixed evaluation set.
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicketEntry {
    pub id: String,
    pub role: TicketRole,
    pub title: String,
    pub summary: String,
    pub description: String,
    /// Composed model input.
    pub text: String,
    pub gold: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Pending,
    Labeled,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub round: u32,
    pub instance_id: String,
    pub text: String,
    pub title: String,
    pub summary: String,
    pub description: String,
    pub predicted: String,
    pub confidence: f64,
    pub status: TaskStatus,
    pub label: Option<String>,
    pub note: Option<String>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
enum TaskEvent {
    Created { sampler: Sampler, k: usize, task: AnnotationTask },
    Resolved { task_id: String, status: TaskStatus, label: Option<String>, note: Option<String>, at: DateTime<Utc> },
}

#[derive(Debug, Clone)]
struct PendingRound {
    batch: QueryBatch,
    task_ids: Vec<String>,
}

/// Reads a JSONL journal. An unparsable last line without a trailing newline
/// is a torn write: it is dropped and cut from the file.
fn read_journal<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ServiceError> {
    let Ok(bytes) = fs::read(path) else {
        return Ok(Vec::new());
    };
    let text = String::from_utf8_lossy(&bytes);
    let mut out = Vec::new();
    let mut offset = 0usize;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.trim_end_matches(['\n', '\r']);
        let last = i + 1 == lines.len();
        if line.trim().is_empty() {
            offset += raw.len();
            continue;
        }
        let torn = last && !raw.ends_with('\n');
        match serde_json::from_str(line) {
            Ok(v) if !torn => out.push(v),
            Err(e) if !torn => {
                return Err(ServiceError::CorruptJournal {
                    file: path.display().to_string(),
                    line: i + 1,
                    reason: e.to_string(),
                });
            }
            _ => {
                tracing::warn!(file = %path.display(), "dropping torn journal tail");
                fs::OpenOptions::new().write(true).open(path)?.set_len(offset as u64)?;
                break;
            }
        }
        offset += raw.len();
    }
    Ok(out)
}

fn append_journal<T: Serialize>(path: &Path, value: &T) -> Result<(), ServiceError> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_vec(value).expect("journal entry serializes");
    line.push(b'\n');
    f.write_all(&line)?;
    f.sync_data()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub summary: String,
    #[serde(default)]
    pub description: String,
    pub template: Option<TemplateId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelProbability {
    pub label: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub label: String,
    pub probabilities: Vec<LabelProbability>,
    pub iteration: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRequest {
    pub label: Option<String>,
    #[serde(default)]
    pub skip: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    /// Tasks wait for human annotation.
    #[default]
    Queued,
    /// Tasks are answered immediately from pool gold labels.
    Simulated,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRequest {
    pub sampler: Option<Sampler>,
    pub k: Option<usize>,
    #[serde(default)]
    pub oracle: OracleKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub status: String,
    pub round: u32,
    pub tasks: Vec<String>,
    pub record: Option<RoundRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub iteration: Option<u32>,
}

/// The service state machine, independent of HTTP.
pub struct Service {
    dir: PathBuf,
    config: ServiceConfig,
    learner: ActiveLearner,
    tickets: HashMap<String, TicketEntry>,
    tasks: Vec<AnnotationTask>,
    pending: Option<PendingRound>,
    rounds: Vec<RoundRecord>,
    metrics: Vec<EvalReport>,
    next_task: usize,
}

impl Service {
    /// Creates a fresh data directory. Fails if one already exists there.
    pub fn create(
        dir: &Path,
        config: &ServiceConfig,
        labels: &LabelRegistry,
        tickets: &[TicketEntry],
    ) -> Result<Self, ServiceError> {
        if dir.join("service.json").exists() {
            return Err(ServiceError::BadRequest(format!("{} already holds a service", dir.display())));
        }
        fs::create_dir_all(dir.join("artifacts"))?;
        labels.write_label_file(&dir.join("labels.txt"))?;
        let mut buf = Vec::new();
        for t in tickets {
            if let Some(g) = &t.gold {
                if labels.id_of(g).is_none() {
                    return Err(ServiceError::UnknownLabel(g.clone()));
                }
            } else if t.role != TicketRole::Pool {
                return Err(ServiceError::BadRequest(format!("ticket `{}` needs a gold label", t.id)));
            }
            buf.extend(serde_json::to_vec(t).expect("ticket serializes"));
            buf.push(b'\n');
        }
        fs::write(dir.join("tickets.jsonl"), buf)?;
        let mut cfg = serde_json::to_vec_pretty(config).expect("config serializes");
        cfg.push(b'\n');
        fs::write(dir.join("service.json"), cfg)?;
        Self::open(dir)
    }

    /// Builds a dataset from a labeled corpus and seeds a data directory.
    ///
    /// The training split is divided into `seed_labeled` seed tickets and the
    /// unlabeled pool; the validation split becomes the fixed evaluation set.
    pub fn create_from_corpus(
        dir: &Path,
        config: &ServiceConfig,
        labels: &LabelRegistry,
        corpus: &[RawTicket],
        selection: &SelectionConfig,
        seed_labeled: usize,
    ) -> Result<Self, ServiceError> {
        let mut selection = selection.clone();
        selection.template = config.trainer.template;
        let split = build_dataset(corpus, &selection, labels)?;
        let raw: HashMap<&str, &RawTicket> = corpus.iter().map(|t| (t.ticket_id.as_str(), t)).collect();
        let entry = |ex: &crate::builder::Example, role| {
            let t = raw[ex.ticket_id.as_str()];
            TicketEntry {
                id: ex.ticket_id.clone(),
                role,
                title: t.title.clone(),
                summary: t.summary.clone(),
                description: t.updates[ex.drawn_update_index as usize - 1].description.clone(),
                text: ex.input_text.clone(),
                gold: labels.name(ex.label).map(str::to_string),
            }
        };
        let mut tickets = Vec::new();
        for (i, ex) in split.train.iter().enumerate() {
            tickets.push(entry(ex, if i < seed_labeled { TicketRole::Seed } else { TicketRole::Pool }));
        }
        tickets.extend(split.val.iter().map(|ex| entry(ex, TicketRole::Validation)));
        Self::create(dir, config, labels, &tickets)
    }

    /// Opens an existing data directory and replays its journals.
    pub fn open(dir: &Path) -> Result<Self, ServiceError> {
        let config: ServiceConfig = serde_json::from_slice(&fs::read(dir.join("service.json"))?)
            .map_err(|e| ServiceError::BadRequest(format!("service.json: {e}")))?;
        let labels = LabelRegistry::read_label_file(&dir.join("labels.txt"))?;
        let entries: Vec<TicketEntry> = read_journal(&dir.join("tickets.jsonl"))?;
        let gold_id = |t: &TicketEntry| -> Result<LabelId, ServiceError> {
            let g = t.gold.as_deref().unwrap_or_default();
            labels.id_of(g).ok_or_else(|| ServiceError::UnknownLabel(g.to_string()))
        };
        let mut seed = Vec::new();
        let mut pool = Vec::new();
        let mut validation = Vec::new();
        for t in &entries {
            match t.role {
                TicketRole::Seed => seed.push(LabeledInstance { id: t.id.clone(), text: t.text.clone(), label: gold_id(t)? }),
                TicketRole::Pool => pool.push(Instance { id: t.id.clone(), text: t.text.clone() }),
                TicketRole::Validation => validation.push((t.text.clone(), gold_id(t)?)),
            }
        }
        let state = PoolState::new(seed, pool)?;
        let learner = ActiveLearner::new(state, config.trainer.clone(), labels, validation, config.seed)
            .with_artifact_dir(dir.join("artifacts"));
        let mut svc = Service {
            dir: dir.to_path_buf(),
            config,
            learner,
            tickets: entries.into_iter().map(|t| (t.id.clone(), t)).collect(),
            tasks: Vec::new(),
            pending: None,
            rounds: read_journal(&dir.join("rounds.jsonl"))?,
            metrics: read_journal(&dir.join("metrics.jsonl"))?,
            next_task: 0,
        };
        svc.replay()?;
        Ok(svc)
    }

    fn replay(&mut self) -> Result<(), ServiceError> {
        let events: Vec<TaskEvent> = read_journal(&self.dir.join("tasks.jsonl"))?;
        let mut by_round: Vec<(u32, Sampler, usize, Vec<String>)> = Vec::new();
        for ev in events {
            match ev {
                TaskEvent::Created { sampler, k, task } => {
                    match by_round.last_mut() {
                        Some((r, _, _, ids)) if *r == task.round => ids.push(task.task_id.clone()),
                        _ => by_round.push((task.round, sampler, k, vec![task.task_id.clone()])),
                    }
                    self.next_task += 1;
                    self.tasks.push(task);
                }
                TaskEvent::Resolved { task_id, status, label, note, at } => {
                    let t = self.tasks.iter_mut().find(|t| t.task_id == task_id).ok_or_else(|| {
                        ServiceError::CorruptJournal {
                            file: "tasks.jsonl".into(),
                            line: 0,
                            reason: format!("resolution for unknown task {task_id}"),
                        }
                    })?;
                    t.status = status;
                    t.label = label;
                    t.note = note;
                    t.updated_at = at;
                }
            }
        }

        // replay completed rounds against the pool
        let committed = self.rounds.len();
        for (round, sampler, k, ids) in by_round {
            let batch = self.batch_for(&ids, sampler, k);
            let pending = PendingRound { batch, task_ids: ids };
            if (round as usize) <= committed {
                let answers = self.answers_for(&pending.task_ids);
                let (next, _) = apply_answers(&self.learner.state, &pending.batch, &answers, &self.learner.labels)?;
                self.learner.state = next;
            } else {
                self.pending = Some(pending);
            }
        }

        // the newest committed model
        let iteration = committed as u32;
        let path = self.artifact_path(iteration);
        if path.exists() {
            let artifact = load_artifact(&path)?;
            self.learner.state.model = Some(Predictor::new(artifact, None)?);
            self.learner.state.iteration = iteration;
            self.learner.last_report = self.metrics.last().cloned();
            if self.metrics.len() <= committed {
                // crashed between saving the model and journaling its metrics
                self.record_metrics()?;
            }
        } else if committed > 0 {
            return Err(ServiceError::CorruptJournal {
                file: path.display().to_string(),
                line: 0,
                reason: "artifact for the last committed round is missing".into(),
            });
        }
        if let Some(p) = &mut self.pending {
            p.batch.generation = self.learner.state.generation;
        }
        self.maybe_complete_round()?;
        Ok(())
    }

    fn artifact_path(&self, iteration: u32) -> PathBuf {
        self.dir.join("artifacts").join(format!("artifact-{iteration}.json"))
    }

    fn batch_for(&self, task_ids: &[String], sampler: Sampler, k: usize) -> QueryBatch {
        let items = task_ids
            .iter()
            .map(|id| {
                let t = self.task(id).expect("task recorded");
                QueryItem {
                    id: t.instance_id.clone(),
                    confidence: t.confidence,
                    predicted: self.learner.labels.id_of(&t.predicted).unwrap_or(LabelId(0)),
                }
            })
            .collect();
        QueryBatch { items, k, generation: self.learner.state.generation, sampler }
    }

    fn answers_for(&self, task_ids: &[String]) -> HashMap<String, OracleAnswer> {
        task_ids
            .iter()
            .filter_map(|id| self.task(id))
            .map(|t| {
                let answer = match (t.status, &t.label) {
                    (TaskStatus::Labeled, Some(name)) => {
                        self.learner.labels.id_of(name).map_or(OracleAnswer::Abstain, OracleAnswer::Label)
                    }
                    _ => OracleAnswer::Abstain,
                };
                (t.instance_id.clone(), answer)
            })
            .collect()
    }

    fn task(&self, task_id: &str) -> Option<&AnnotationTask> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    fn record_metrics(&mut self) -> Result<(), ServiceError> {
        if let Some(report) = self.learner.last_report.clone() {
            append_journal(&self.dir.join("metrics.jsonl"), &report)?;
            self.metrics.push(report);
        }
        Ok(())
    }

    fn ensure_model(&mut self) -> Result<(), ServiceError> {
        if self.learner.state.model.is_none() {
            self.learner.fit_initial()?;
            self.record_metrics()?;
        }
        Ok(())
    }

    /// Trains M⁽⁰⁾ now instead of at the first step.
    pub fn train_initial(&mut self) -> Result<(), ServiceError> {
        self.ensure_model()
    }

    fn maybe_complete_round(&mut self) -> Result<Option<RoundRecord>, ServiceError> {
        let Some(p) = &self.pending else {
            return Ok(None);
        };
        if p.task_ids.iter().any(|id| self.task(id).is_some_and(|t| t.status == TaskStatus::Pending)) {
            return Ok(None);
        }
        let p = self.pending.take().expect("checked above");
        let answers = self.answers_for(&p.task_ids);
        let record = self.learner.complete_round(&p.batch, &answers)?;
        append_journal(&self.dir.join("rounds.jsonl"), &record)?;
        self.rounds.push(record.clone());
        self.record_metrics()?;
        Ok(Some(record))
    }

    pub fn labels(&self) -> &LabelRegistry {
        &self.learner.labels
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn pool_state(&self) -> &PoolState {
        &self.learner.state
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn latest_metrics(&self) -> Option<&EvalReport> {
        self.metrics.last()
    }

    pub fn metrics_history(&self) -> &[EvalReport] {
        &self.metrics
    }

    pub fn health(&self) -> Health {
        match &self.learner.state.model {
            Some(m) => Health { status: "ok".into(), iteration: Some(m.artifact().iteration) },
            None => Health { status: "no_model".into(), iteration: None },
        }
    }

    pub fn predict(&self, req: &PredictRequest) -> Result<PredictResponse, ServiceError> {
        let model = self.learner.state.model.as_ref().ok_or(ServiceError::NoModelLoaded)?;
        let template = req.template.unwrap_or(model.artifact().template());
        let text = compose(template, &clean(&req.title), &clean(&req.summary), &clean(&req.description))
            .map_err(|e| match e {
                FeatureError::EmptyDescription => ServiceError::EmptyDescription,
                other => ServiceError::BadRequest(other.to_string()),
            })?;
        let probs = model.predict(&text)?;
        let labels = model.labels();
        Ok(PredictResponse {
            label: labels.name(probs.argmax()).unwrap_or_default().to_string(),
            probabilities: labels
                .entries()
                .map(|(id, name)| LabelProbability { label: name.to_string(), probability: probs[id.0] })
                .collect(),
            iteration: model.artifact().iteration,
        })
    }

    /// Tasks with the given status (all when `None`), in query order.
    pub fn queue(&self, status: Option<TaskStatus>) -> Vec<AnnotationTask> {
        let mut out: Vec<AnnotationTask> =
            self.tasks.iter().filter(|t| status.is_none_or(|s| t.status == s)).cloned().collect();
        out.sort_by(|a, b| {
            a.round
                .cmp(&b.round)
                .then(a.confidence.total_cmp(&b.confidence))
                .then_with(|| a.instance_id.cmp(&b.instance_id))
        });
        out
    }

    pub fn step(&mut self, req: &StepRequest) -> Result<StepResponse, ServiceError> {
        if self.pending.is_some() {
            return Err(ServiceError::StepInProgress);
        }
        let sampler = req.sampler.unwrap_or(self.config.default_sampler);
        let k = req.k.unwrap_or(self.config.default_k);
        self.ensure_model()?;
        let batch = self.learner.query(sampler, k)?;
        let round = self.rounds.len() as u32 + 1;
        let now = Utc::now();
        let mut task_ids = Vec::new();
        for item in &batch.items {
            let ticket = &self.tickets[&item.id];
            self.next_task += 1;
            let task = AnnotationTask {
                task_id: format!("task-{:06}", self.next_task),
                round,
                instance_id: item.id.clone(),
                text: ticket.text.clone(),
                title: ticket.title.clone(),
                summary: ticket.summary.clone(),
                description: ticket.description.clone(),
                predicted: self.learner.labels.name(item.predicted).unwrap_or_default().to_string(),
                confidence: item.confidence,
                status: TaskStatus::Pending,
                label: None,
                note: None,
                created_at: now,
                updated_at: now,
            };
            append_journal(&self.dir.join("tasks.jsonl"), &TaskEvent::Created { sampler, k, task: task.clone() })?;
            task_ids.push(task.task_id.clone());
            self.tasks.push(task);
        }
        self.pending = Some(PendingRound { batch, task_ids: task_ids.clone() });

        if req.oracle == OracleKind::Simulated {
            for id in &task_ids {
                let instance = self.task(id).expect("just created").instance_id.clone();
                let gold = self.tickets[&instance].gold.clone();
                let req = match gold {
                    Some(label) => LabelRequest { label: Some(label), skip: false, note: Some("simulated".into()) },
                    None => LabelRequest { label: None, skip: true, note: Some("simulated".into()) },
                };
                self.resolve(id, &req, false)?;
            }
            let record = self.maybe_complete_round()?;
            return Ok(StepResponse { status: "completed".into(), round, tasks: task_ids, record });
        }
        Ok(StepResponse { status: "awaiting annotations".into(), round, tasks: task_ids, record: None })
    }

    fn resolve(&mut self, task_id: &str, req: &LabelRequest, complete: bool) -> Result<AnnotationTask, ServiceError> {
        let idx = self
            .tasks
            .iter()
            .position(|t| t.task_id == task_id)
            .ok_or_else(|| ServiceError::UnknownTask(task_id.to_string()))?;
        if self.tasks[idx].status != TaskStatus::Pending {
            return Err(ServiceError::AlreadyResolved(task_id.to_string()));
        }
        let (status, label) = match (&req.label, req.skip) {
            (Some(_), true) => return Err(ServiceError::BadRequest("give either a label or skip, not both".into())),
            (None, false) => return Err(ServiceError::BadRequest("missing label".into())),
            (None, true) => (TaskStatus::Skipped, None),
            (Some(name), false) => {
                if self.learner.labels.id_of(name).is_none() {
                    return Err(ServiceError::UnknownLabel(name.clone()));
                }
                (TaskStatus::Labeled, Some(name.clone()))
            }
        };
        let at = Utc::now();
        append_journal(
            &self.dir.join("tasks.jsonl"),
            &TaskEvent::Resolved { task_id: task_id.to_string(), status, label: label.clone(), note: req.note.clone(), at },
        )?;
        let t = &mut self.tasks[idx];
        t.status = status;
        t.label = label;
        t.note = req.note.clone();
        t.updated_at = at;
        let out = t.clone();
        if complete {
            self.maybe_complete_round()?;
        }
        Ok(out)
    }

    /// Records an annotation; resolving the last pending task of a round retrains.
    pub fn submit_label(&mut self, task_id: &str, req: &LabelRequest) -> Result<AnnotationTask, ServiceError> {
        self.resolve(task_id, req, true)
    }
}

pub type SharedService = Arc<Mutex<Service>>;

fn lock(svc: &SharedService) -> MutexGuard<'_, Service> {
    svc.lock().unwrap_or_else(|e| e.into_inner())
}

#[derive(Debug, Deserialize)]
struct QueueParams {
    status: Option<String>,
}

async fn predict_handler(
    State(svc): State<SharedService>,
    Json(req): Json<PredictRequest>,
) -> Result<Json<PredictResponse>, ServiceError> {
    Ok(Json(lock(&svc).predict(&req)?))
}

async fn queue_handler(
    State(svc): State<SharedService>,
    Query(params): Query<QueueParams>,
) -> Result<Json<Vec<AnnotationTask>>, ServiceError> {
    let status = match params.status.as_deref().unwrap_or("pending") {
        "pending" => Some(TaskStatus::Pending),
        "labeled" => Some(TaskStatus::Labeled),
        "skipped" => Some(TaskStatus::Skipped),
        "all" => None,
        other => return Err(ServiceError::BadRequest(format!("unknown status `{other}`"))),
    };
    Ok(Json(lock(&svc).queue(status)))
}

async fn label_handler(
    State(svc): State<SharedService>,
    UrlPath(task_id): UrlPath<String>,
    Json(req): Json<LabelRequest>,
) -> Result<Json<AnnotationTask>, ServiceError> {
    // resolving the last task of a round retrains the model
    blocking(move || lock(&svc).submit_label(&task_id, &req)).await
}

async fn step_handler(
    State(svc): State<SharedService>,
    body: Option<Json<StepRequest>>,
) -> Result<Json<StepResponse>, ServiceError> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    blocking(move || lock(&svc).step(&req)).await
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<Json<T>, ServiceError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json),
        Err(e) => Err(ServiceError::Io(std::io::Error::other(e))),
    }
}

async fn metrics_handler(State(svc): State<SharedService>) -> Result<Json<EvalReport>, ServiceError> {
    lock(&svc).latest_metrics().cloned().map(Json).ok_or(ServiceError::NoModelLoaded)
}

async fn metrics_history_handler(State(svc): State<SharedService>) -> Json<Vec<EvalReport>> {
    Json(lock(&svc).metrics_history().to_vec())
}

async fn rounds_handler(State(svc): State<SharedService>) -> Json<Vec<RoundRecord>> {
    Json(lock(&svc).rounds().to_vec())
}

async fn labels_handler(State(svc): State<SharedService>) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "labels": lock(&svc).labels().names() }))
}

async fn health_handler(State(svc): State<SharedService>) -> Json<Health> {
    Json(lock(&svc).health())
}

pub fn router(svc: SharedService) -> Router {
    Router::new()
        .route("/predict", post(predict_handler))
        .route("/queue", get(queue_handler))
        .route("/queue/{task_id}/label", post(label_handler))
        .route("/al/step", post(step_handler))
        .route("/metrics", get(metrics_handler))
        .route("/metrics/history", get(metrics_history_handler))
        .route("/rounds", get(rounds_handler))
        .route("/labels", get(labels_handler))
        .route("/health", get(health_handler))
        .with_state(svc)
}

/// Serves until Ctrl-C.
pub async fn serve(service: Service, addr: SocketAddr) -> Result<(), ServiceError> {
    let app = router(Arc::new(Mutex::new(service)));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
