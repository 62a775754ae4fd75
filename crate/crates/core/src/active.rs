//! Pool-based active learning with least-confidence querying.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::artifact::train_classifier_from;
use crate::classifiers::{ClassifierArtifact, ClassifierError, EncoderBackend, Predictor, TrainerConfig, save_artifact};
use crate::corpus::{LabelId, LabelRegistry};
use crate::evalkit::{EvalError, EvalReport, evaluate};

pub const DEFAULT_BATCH_SIZE: usize = 32;

#[derive(Debug, Error)]
pub enum ActiveError {
    #[error("unlabeled pool is empty")]
    EmptyPool,
    #[error("batch size must be at least 1")]
    InvalidBatchSize,
    #[error("labeled set is empty; cannot fit an initial model")]
    EmptyLabeledSet,
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("stale batch: {0}")]
    StaleBatch(String),
    #[error("instance `{0}` appears more than once")]
    DuplicateInstance(String),
    #[error("oracle returned label {0} outside the registry")]
    InvalidLabel(usize),
    #[error("no model has been trained yet")]
    NoModel,
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    #[default]
    LeastConfident,
    Random,
}

impl FromStr for Sampler {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lc" | "least_confident" | "least-confident" => Ok(Sampler::LeastConfident),
            "random" => Ok(Sampler::Random),
            _ => Err(format!("unknown sampler `{s}` (expected lc or random)")),
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampler::LeastConfident => "least_confident",
            Sampler::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub id: String,
    pub text: String,
    pub label: LabelId,
}

/// L⁽ⁱ⁾, U⁽ⁱ⁾, the round counter and the current model.
#[derive(Debug, Clone)]
pub struct PoolState {
    pub labeled: Vec<LabeledInstance>,
    pub unlabeled: Vec<Instance>,
    pub iteration: u32,
    /// Bumped on every pool mutation; batches carry the value they were drawn at.
    pub generation: u64,
    pub model: Option<Predictor>,
}

impl PoolState {
    pub fn new(labeled: Vec<LabeledInstance>, unlabeled: Vec<Instance>) -> Result<Self, ActiveError> {
        let mut seen = HashSet::new();
        for id in labeled.iter().map(|l| &l.id).chain(unlabeled.iter().map(|u| &u.id)) {
            if !seen.insert(id.as_str()) {
                return Err(ActiveError::DuplicateInstance(id.clone()));
            }
        }
        Ok(PoolState { labeled, unlabeled, iteration: 0, generation: 0, model: None })
    }

    pub fn training_pairs(&self) -> Vec<(String, LabelId)> {
        self.labeled.iter().map(|l| (l.text.clone(), l.label)).collect()
    }

    pub fn is_labeled(&self, id: &str) -> bool {
        self.labeled.iter().any(|l| l.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryItem {
    pub id: String,
    /// Largest predicted probability.
    pub confidence: f64,
    pub predicted: LabelId,
}

/// Items ascending by confidence, ties by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryBatch {
    pub items: Vec<QueryItem>,
    pub k: usize,
    pub generation: u64,
    pub sampler: Sampler,
}

impl QueryBatch {
    pub fn ids(&self) -> Vec<String> {
        self.items.iter().map(|i| i.id.clone()).collect()
    }
}

fn score_pool(model: &Predictor, pool: &[Instance]) -> Result<Vec<QueryItem>, ActiveError> {
    let texts: Vec<String> = pool.iter().map(|u| u.text.clone()).collect();
    let probs = model.predict_batch(&texts)?;
    Ok(pool
        .iter()
        .zip(probs)
        .map(|(u, p)| QueryItem { id: u.id.clone(), confidence: p.max(), predicted: p.argmax() })
        .collect())
}

fn sort_items(items: &mut [QueryItem]) {
    items.sort_by(|a, b| a.confidence.total_cmp(&b.confidence).then_with(|| a.id.cmp(&b.id)));
}

/// The `k` instances whose best label is least probable.
pub fn query_least_confident(model: &Predictor, state: &PoolState, k: usize) -> Result<QueryBatch, ActiveError> {
    if k == 0 {
        return Err(ActiveError::InvalidBatchSize);
    }
    if state.unlabeled.is_empty() {
        return Err(ActiveError::EmptyPool);
    }
    let mut items = score_pool(model, &state.unlabeled)?;
    sort_items(&mut items);
    items.truncate(k);
    Ok(QueryBatch { items, k, generation: state.generation, sampler: Sampler::LeastConfident })
}

/// Uniform sample without replacement; confidences come from `model`.
pub fn query_random(model: &Predictor, state: &PoolState, k: usize, seed: u64) -> Result<QueryBatch, ActiveError> {
    if k == 0 {
        return Err(ActiveError::InvalidBatchSize);
    }
    if state.unlabeled.is_empty() {
        return Err(ActiveError::EmptyPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = state.unlabeled.len();
    let mut picked: Vec<usize> = sample(&mut rng, n, k.min(n)).into_vec();
    picked.sort_unstable();
    let chosen: Vec<Instance> = picked.into_iter().map(|i| state.unlabeled[i].clone()).collect();
    let mut items = score_pool(model, &chosen)?;
    sort_items(&mut items);
    Ok(QueryBatch { items, k, generation: state.generation, sampler: Sampler::Random })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "answer", content = "label")]
pub enum OracleAnswer {
    Label(LabelId),
    Abstain,
}

pub trait Oracle {
    fn label(&mut self, id: &str) -> OracleAnswer;
}

/// Answers from a held-out gold store; unknown ids are abstentions.
#[derive(Debug, Clone, Default)]
pub struct SimulatedOracle {
    gold: HashMap<String, LabelId>,
    abstain: HashSet<String>,
}

impl SimulatedOracle {
    pub fn new(gold: HashMap<String, LabelId>) -> Self {
        SimulatedOracle { gold, abstain: HashSet::new() }
    }

    /// Makes the oracle skip these ids.
    pub fn with_abstentions(mut self, ids: impl IntoIterator<Item = String>) -> Self {
        self.abstain.extend(ids);
        self
    }
}

impl Oracle for SimulatedOracle {
    fn label(&mut self, id: &str) -> OracleAnswer {
        if self.abstain.contains(id) {
            return OracleAnswer::Abstain;
        }
        self.gold.get(id).map_or(OracleAnswer::Abstain, |&l| OracleAnswer::Label(l))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplyOutcome {
    pub answered: Vec<String>,
    pub abstained: Vec<String>,
}

fn check_batch(state: &PoolState, batch: &QueryBatch) -> Result<(), ActiveError> {
    if batch.generation != state.generation {
        return Err(ActiveError::StaleBatch(format!(
            "batch drawn at generation {}, pool is at {}",
            batch.generation, state.generation
        )));
    }
    let in_u: HashSet<&str> = state.unlabeled.iter().map(|u| u.id.as_str()).collect();
    let mut seen = HashSet::new();
    for item in &batch.items {
        if !seen.insert(item.id.as_str()) {
            return Err(ActiveError::DuplicateInstance(item.id.clone()));
        }
        if !in_u.contains(item.id.as_str()) {
            return Err(if state.is_labeled(&item.id) {
                ActiveError::StaleBatch(format!("`{}` is already labeled", item.id))
            } else {
                ActiveError::UnknownInstance(item.id.clone())
            });
        }
    }
    Ok(())
}

/// Moves answered instances from U to L in batch order; abstentions stay in U.
pub fn apply_answers(
    state: &PoolState,
    batch: &QueryBatch,
    answers: &HashMap<String, OracleAnswer>,
    labels: &LabelRegistry,
) -> Result<(PoolState, ApplyOutcome), ActiveError> {
    check_batch(state, batch)?;
    let mut outcome = ApplyOutcome::default();
    let mut chosen: HashMap<&str, LabelId> = HashMap::new();
    for item in &batch.items {
        match answers.get(&item.id).copied().unwrap_or(OracleAnswer::Abstain) {
            OracleAnswer::Label(l) => {
                if !labels.contains(l) {
                    return Err(ActiveError::InvalidLabel(l.0));
                }
                chosen.insert(item.id.as_str(), l);
                outcome.answered.push(item.id.clone());
            }
            OracleAnswer::Abstain => outcome.abstained.push(item.id.clone()),
        }
    }
    let mut next = state.clone();
    let texts: HashMap<&str, &str> = state.unlabeled.iter().map(|u| (u.id.as_str(), u.text.as_str())).collect();
    for id in &outcome.answered {
        next.labeled.push(LabeledInstance { id: id.clone(), text: texts[id.as_str()].to_string(), label: chosen[id.as_str()] });
    }
    next.unlabeled.retain(|u| !chosen.contains_key(u.id.as_str()));
    next.generation += 1;
    Ok((next, outcome))
}

pub fn apply_labels(
    state: &PoolState,
    batch: &QueryBatch,
    oracle: &mut dyn Oracle,
    labels: &LabelRegistry,
) -> Result<(PoolState, ApplyOutcome), ActiveError> {
    check_batch(state, batch)?;
    let answers = batch.items.iter().map(|i| (i.id.clone(), oracle.label(&i.id))).collect();
    apply_answers(state, batch, &answers, labels)
}

/// One line of the round log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub iteration: u32,
    pub labeled: usize,
    pub queried: Vec<String>,
    pub sampler: String,
    pub val_macro_f1: f64,
    pub artifact_path: String,
}

pub fn append_round(path: &Path, record: &RoundRecord) -> Result<(), ActiveError> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_vec(record).expect("round record serializes");
    line.push(b'\n');
    f.write_all(&line)?;
    Ok(())
}

pub fn read_rounds(path: &Path) -> Result<Vec<RoundRecord>, ActiveError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| ActiveError::Io(std::io::Error::other(e))))
        .collect()
}

/// Index of the first record reaching `target` macro-F1.
pub fn rounds_to_target(records: &[RoundRecord], target: f64) -> Option<usize> {
    records.iter().position(|r| r.val_macro_f1 >= target)
}

/// Owns the pool and drives query, labeling and retraining.
pub struct ActiveLearner {
    pub state: PoolState,
    pub trainer: TrainerConfig,
    pub labels: LabelRegistry,
    pub validation: Vec<(String, LabelId)>,
    pub backend: Option<Arc<dyn EncoderBackend>>,
    /// When set, every model is saved as `artifact-{i}.json` here.
    pub artifact_dir: Option<PathBuf>,
    pub seed: u64,
    pub last_report: Option<EvalReport>,
}

impl ActiveLearner {
    pub fn new(
        state: PoolState,
        trainer: TrainerConfig,
        labels: LabelRegistry,
        validation: Vec<(String, LabelId)>,
        seed: u64,
    ) -> Self {
        ActiveLearner {
            state,
            trainer,
            labels,
            validation,
            backend: None,
            artifact_dir: None,
            seed,
            last_report: None,
        }
    }

    pub fn with_backend(mut self, backend: Arc<dyn EncoderBackend>) -> Self {
        self.backend = Some(backend);
        self
    }

    pub fn with_artifact_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.artifact_dir = Some(dir.into());
        self
    }

    fn train(&self, iteration: u32) -> Result<ClassifierArtifact, ActiveError> {
        if self.state.labeled.is_empty() {
            return Err(ActiveError::EmptyLabeledSet);
        }
        let previous = self.state.model.as_ref().map(|m| m.artifact());
        Ok(train_classifier_from(
            &self.trainer,
            &self.state.training_pairs(),
            &self.labels,
            self.backend.as_deref(),
            iteration,
            previous,
        )?)
    }

    fn install(&mut self, artifact: ClassifierArtifact, sampler: &str, queried: Vec<String>) -> Result<RoundRecord, ActiveError> {
        let iteration = artifact.iteration;
        let artifact_path = match &self.artifact_dir {
            Some(dir) => {
                let p = dir.join(format!("artifact-{iteration}.json"));
                save_artifact(&artifact, &p)?;
                p.display().to_string()
            }
            None => String::new(),
        };
        let predictor = Predictor::new(artifact, self.backend.clone())?;
        let report = evaluate(&predictor, &self.validation, &self.labels)?;
        let record = RoundRecord {
            iteration,
            labeled: self.state.labeled.len(),
            queried,
            sampler: sampler.to_string(),
            val_macro_f1: report.macro_f1,
            artifact_path,
        };
        self.state.model = Some(predictor);
        self.state.iteration = iteration;
        self.last_report = Some(report);
        Ok(record)
    }

    /// Fits M⁽⁰⁾ on the seed labels and evaluates it.
    pub fn fit_initial(&mut self) -> Result<RoundRecord, ActiveError> {
        let artifact = self.train(self.state.iteration)?;
        self.install(artifact, "initial", Vec::new())
    }

    pub fn model(&self) -> Result<&Predictor, ActiveError> {
        self.state.model.as_ref().ok_or(ActiveError::NoModel)
    }

    /// Seed for the random sampler at the current iteration.
    pub fn round_seed(&self) -> u64 {
        self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(self.state.iteration as u64)
    }

    pub fn query(&mut self, sampler: Sampler, k: usize) -> Result<QueryBatch, ActiveError> {
        if self.state.model.is_none() {
            self.fit_initial()?;
        }
        let model = self.model()?;
        match sampler {
            Sampler::LeastConfident => query_least_confident(model, &self.state, k),
            Sampler::Random => query_random(model, &self.state, k, self.round_seed()),
        }
    }

    /// Applies answers to a batch and retrains from scratch on the grown labeled set.
    pub fn complete_round(
        &mut self,
        batch: &QueryBatch,
        answers: &HashMap<String, OracleAnswer>,
    ) -> Result<RoundRecord, ActiveError> {
        let (next, _) = apply_answers(&self.state, batch, answers, &self.labels)?;
        let model = self.state.model.take();
        self.state = next;
        self.state.model = model;
        let artifact = self.train(self.state.iteration + 1)?;
        self.install(artifact, &batch.sampler.to_string(), batch.ids())
    }

    /// One full cycle: query, label, augment, retrain.
    pub fn step(&mut self, sampler: Sampler, k: usize, oracle: &mut dyn Oracle) -> Result<RoundRecord, ActiveError> {
        let batch = self.query(sampler, k)?;
        let answers = batch.items.iter().map(|i| (i.id.clone(), oracle.label(&i.id))).collect();
        self.complete_round(&batch, &answers)
    }
}

/// Free-function form of [`ActiveLearner::step`].
pub fn al_step(
    learner: &mut ActiveLearner,
    sampler: Sampler,
    k: usize,
    oracle: &mut dyn Oracle,
) -> Result<RoundRecord, ActiveError> {
    learner.step(sampler, k, oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ModelKind, train_classifier};
    use crate::corpus::default_registry;
    use proptest::prelude::*;

    fn text_for(label: usize, i: usize) -> String {
        let words = ["fpga alert", "firmware rollout", "capacity recovery", "rack buildout"];
        format!("[CLS] {} item{}", words[label % 4], i % 7)
    }

    fn pool(n_labeled: usize, n_unlabeled: usize) -> (PoolState, SimulatedOracle) {
        let labeled = (0..n_labeled)
            .map(|i| LabeledInstance { id: format!("L{i:04}"), text: text_for(i, i), label: LabelId(i % 4) })
            .collect();
        let unlabeled: Vec<Instance> =
            (0..n_unlabeled).map(|i| Instance { id: format!("U{i:04}"), text: text_for(i, i + 3) }).collect();
        let gold = (0..n_unlabeled).map(|i| (format!("U{i:04}"), LabelId(i % 4))).collect();
        (PoolState::new(labeled, unlabeled).unwrap(), SimulatedOracle::new(gold))
    }

    fn learner(n_labeled: usize, n_unlabeled: usize) -> (ActiveLearner, SimulatedOracle) {
        let (state, oracle) = pool(n_labeled, n_unlabeled);
        let val = (0..20).map(|i| (text_for(i, i), LabelId(i % 4))).collect();
        let cfg = TrainerConfig { model: ModelKind::Nb, ..Default::default() };
        (ActiveLearner::new(state, cfg, default_registry(), val, 1), oracle)
    }

    #[test]
    fn least_confident_order() {
        // NB on these texts gives graded confidences; check ordering and tie-break
        let (mut l, _) = learner(8, 30);
        let batch = l.query(Sampler::LeastConfident, 5).unwrap();
        assert_eq!(batch.items.len(), 5);
        for w in batch.items.windows(2) {
            assert!(w[0].confidence < w[1].confidence || (w[0].confidence == w[1].confidence && w[0].id < w[1].id));
        }
        let all = l.query(Sampler::LeastConfident, 1000).unwrap();
        assert_eq!(all.items.len(), 30);
        let k = l.labels.len() as f64;
        assert!(all.items.iter().all(|i| i.confidence >= 1.0 / k - 1e-12 && i.confidence <= 1.0));
    }

    #[test]
    fn random_is_seeded_permutation() {
        let (mut l, _) = learner(8, 30);
        let a = l.query(Sampler::Random, 30).unwrap();
        let b = l.query(Sampler::Random, 30).unwrap();
        assert_eq!(a, b);
        let mut ids = a.ids();
        ids.sort();
        let mut want: Vec<String> = l.state.unlabeled.iter().map(|u| u.id.clone()).collect();
        want.sort();
        assert_eq!(ids, want);
        assert!(matches!(l.query(Sampler::Random, 0), Err(ActiveError::InvalidBatchSize)));
    }

    #[test]
    fn apply_counts_and_abstentions() {
        let (mut l, oracle) = learner(100, 900);
        let batch = l.query(Sampler::LeastConfident, 10).unwrap();
        let (next, out) = apply_labels(&l.state, &batch, &mut oracle.clone(), &l.labels).unwrap();
        assert_eq!((next.labeled.len(), next.unlabeled.len()), (110, 890));
        assert_eq!(out.answered.len(), 10);
        let skip: Vec<String> = batch.ids().into_iter().take(3).collect();
        let mut partial = oracle.clone().with_abstentions(skip);
        let (next, out) = apply_labels(&l.state, &batch, &mut partial, &l.labels).unwrap();
        assert_eq!(next.labeled.len(), 107);
        assert_eq!(out.abstained.len(), 3);
        // reapplying against the advanced pool is stale
        l.state = next;
        assert!(matches!(apply_labels(&l.state, &batch, &mut oracle.clone(), &l.labels), Err(ActiveError::StaleBatch(_))));
    }

    #[test]
    fn already_labeled_id_is_stale() {
        let (l, mut oracle) = pool(3, 3);
        let batch = QueryBatch {
            items: vec![QueryItem { id: "L0000".into(), confidence: 0.5, predicted: LabelId(0) }],
            k: 1,
            generation: l.generation,
            sampler: Sampler::Random,
        };
        assert!(matches!(apply_labels(&l, &batch, &mut oracle, &default_registry()), Err(ActiveError::StaleBatch(_))));
        let mut unknown = batch.clone();
        unknown.items[0].id = "nope".into();
        assert!(matches!(
            apply_labels(&l, &unknown, &mut oracle, &default_registry()),
            Err(ActiveError::UnknownInstance(_))
        ));
    }

    #[test]
    fn five_steps_grow_labeled_set() {
        let (mut l, mut oracle) = learner(100, 400);
        let mut records = Vec::new();
        for _ in 0..5 {
            records.push(al_step(&mut l, Sampler::LeastConfident, 20, &mut oracle).unwrap());
        }
        assert_eq!(l.state.labeled.len(), 200);
        assert_eq!(l.state.iteration, 5);
        assert_eq!(records.last().unwrap().labeled, 200);
        assert_eq!(records.iter().map(|r| r.iteration).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let run = || {
            let (mut l, mut oracle) = learner(10, 60);
            (0..3).map(|_| al_step(&mut l, Sampler::Random, 7, &mut oracle).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let l = vec![LabeledInstance { id: "a".into(), text: "x".into(), label: LabelId(0) }];
        let u = vec![Instance { id: "a".into(), text: "y".into() }];
        assert!(matches!(PoolState::new(l, u), Err(ActiveError::DuplicateInstance(_))));
    }

    #[test]
    fn empty_pool() {
        let (mut l, _) = learner(4, 0);
        assert!(matches!(l.query(Sampler::LeastConfident, 3), Err(ActiveError::EmptyPool)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn pool_is_conserved(k in 1usize..12, abstain_every in 1usize..5, steps in 1usize..4) {
            let (mut l, oracle) = learner(6, 40);
            let total = l.state.labeled.len() + l.state.unlabeled.len();
            let mut prev = l.state.labeled.len();
            for _ in 0..steps {
                let batch = l.query(Sampler::LeastConfident, k).unwrap();
                let skip = batch.ids().into_iter().step_by(abstain_every).collect::<Vec<_>>();
                let mut o = oracle.clone().with_abstentions(skip);
                let (next, _) = apply_labels(&l.state, &batch, &mut o, &l.labels).unwrap();
                let li: HashSet<_> = next.labeled.iter().map(|x| x.id.clone()).collect();
                prop_assert!(next.unlabeled.iter().all(|u| !li.contains(&u.id)));
                prop_assert_eq!(next.labeled.len() + next.unlabeled.len(), total);
                prop_assert!(next.labeled.len() >= prev);
                prev = next.labeled.len();
                let model = l.state.model.take();
                l.state = next;
                l.state.model = model;
            }
        }

        #[test]
        fn lc_invariant_under_order_preserving_relabel(offset in 0usize..500) {
            let (state, _) = pool(6, 25);
            let reg = default_registry();
            let cfg = TrainerConfig { model: ModelKind::Nb, ..Default::default() };
            let art = train_classifier(&cfg, &state.training_pairs(), &reg, None, 0).unwrap();
            let model = Predictor::new(art, None).unwrap();
            let a = query_least_confident(&model, &state, 8).unwrap();
            let mut renamed = state.clone();
            for u in &mut renamed.unlabeled {
                let n: usize = u.id[1..].parse().unwrap();
                u.id = format!("X{:06}", n + offset);
            }
            let b = query_least_confident(&model, &renamed, 8).unwrap();
            let map = |id: &str| format!("X{:06}", id[1..].parse::<usize>().unwrap() + offset);
            // positions of distinct confidences must agree
            for (x, y) in a.items.iter().zip(&b.items) {
                prop_assert_eq!(x.confidence, y.confidence);
                let distinct = a.items.iter().filter(|o| o.confidence == x.confidence).count() == 1;
                if distinct {
                    prop_assert_eq!(map(&x.id), y.id.clone());
                }
            }
        }
    }
}
