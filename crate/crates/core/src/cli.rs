//! The `triage` command line.
//!
//! ```text
//! triage synth --out corpus.jsonl --tickets 2000
//! triage report-updates --corpus corpus.jsonl --thresholds 10,20,50,100,200
//! triage build --corpus corpus.jsonl --out split/ --template 2
//! triage train --split split/ --model lr --features bow --out run/
//! triage eval --artifact run/artifact.json --split split/ --out eval/
//! triage al-run --split split/ --sampler lc --k 32 --rounds 5 --seed 7 --out al/
//! triage serve --data-dir svc/ --init-corpus corpus.jsonl --seed-labeled 100
//! ```
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::Read;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::active::{
    ActiveError, ActiveLearner, DEFAULT_BATCH_SIZE, Instance, LabeledInstance, PoolState, Sampler, SimulatedOracle,
    append_round,
};
use crate::builder::{
    BuildError, BuildSummary, DatasetKind, DatasetSplit, Example, SelectionConfig, SplitRatios, build_dataset,
    read_split, update_frequency_report, write_split,
};
use crate::classifiers::{
    ClassifierError, ModelKind, Predictor, TrainerConfig, load_artifact, save_artifact, train_classifier,
};
use crate::corpus::{CorpusError, LabelRegistry, default_registry, load_corpus, save_corpus};
use crate::evalkit::{EvalError, EvalReport, evaluate, pr_curves_csv, roc_curves_csv};
use crate::features::{FeatureKind, TemplateId};
use crate::preprocess::{clean, tokenize_for_bag};
use crate::service::{Service, ServiceConfig, ServiceError};
use crate::synthgen::{SignalPlacement, SynthConfig, SynthError, generate};


#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {e}"))
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(_) => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<BuildError> for CliError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::Io(_) => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::InvalidConfig(_)
            | ClassifierError::IncompatibleVersion { .. }
            | ClassifierError::CorruptArtifact(_)
            | ClassifierError::EmptyTrainingSet
            | ClassifierError::LabelOutOfRange { .. } => CliError::Validation(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Classifier(c) => c.into(),
            EvalError::Io(_) => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ActiveError> for CliError {
    fn from(e: ActiveError) -> Self {
        match e {
            ActiveError::Classifier(c) => c.into(),
            ActiveError::Eval(ev) => ev.into(),
            ActiveError::Io(_) => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Io(_) => CliError::Runtime(e.to_string()),
            ServiceError::BadRequest(_) | ServiceError::UnknownLabel(_) | ServiceError::CorruptJournal { .. } => {
                CliError::Validation(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Active-learning settings of a [`RunConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActiveConfig {
    pub sampler: Sampler,
    pub k: usize,
    pub rounds: usize,
    pub seed_labeled: usize,
}

impl Default for ActiveConfig {
    fn default() -> Self {
        ActiveConfig { sampler: Sampler::LeastConfident, k: DEFAULT_BATCH_SIZE, rounds: 5, seed_labeled: 100 }
    }
}

/// Contents of a `--config` file. Command-line flags take precedence, and
/// the global seed replaces the per-section seeds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: SynthConfig,
    pub selection: SelectionConfig,
    pub trainer: TrainerConfig,
    pub active: ActiveConfig,
    pub service: ServiceConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))
    }

    fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.synth.seed = seed;
        self.selection.seed = seed;
        self.trainer.mlp.seed = seed;
        self.service.seed = seed;
    }
}

#[derive(Debug, Parser)]
#[command(name = "triage", version, about = "Incident ticket labeling pipeline")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Label file, one name per line (default: the ten built-in labels).
    #[arg(long, global = true)]
    pub labels: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled corpus.
    Synth(SynthArgs),
    /// Clean raw ticket text.
    Clean(CleanArgs),
    /// Tabulate which update is drawn as representative per length threshold.
    ReportUpdates(ReportArgs),
    /// Select representative updates and write train/val/test splits.
    Build(BuildArgs),
    /// Train a classifier and evaluate it on the test split.
    Train(TrainArgs),
    /// Evaluate a saved artifact.
    Eval(EvalArgs),
    /// Run active learning with a simulated oracle.
    AlRun(AlArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub tickets: Option<usize>,
    #[arg(long)]
    pub label_count: Option<usize>,
    #[arg(long)]
    pub machine_fraction: Option<f64>,
    #[arg(long)]
    pub short_first_prob: Option<f64>,
    /// description-only, title-only or split
    #[arg(long)]
    pub placement: Option<String>,
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Text file to clean; `-` or absent reads stdin.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Print bag tokens instead of the cleaned text.
    #[arg(long)]
    pub tokens: bool,
    /// Print the cleaned text with removal counts as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 20, 50, 100, 200])]
    pub thresholds: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SelectionArgs {
    #[arg(long)]
    pub min_chars: Option<usize>,
    /// d-human, d-machine or d-mixture
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub template: Option<String>,
    /// train,val,test fractions
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub selection: SelectionArgs,
}

#[derive(Debug, Args, Clone)]
pub struct ModelArgs {
    /// nb, lr or mlp
    #[arg(long)]
    pub model: Option<String>,
    /// bow or tfidf
    #[arg(long)]
    pub features: Option<String>,
    #[arg(long)]
    pub vocab_cap: Option<usize>,
}

#[derive(Debug, Args, Clone)]
#[group(required = true, multiple = false)]
pub struct DataSource {
    /// A labeled corpus; splits are built on the fly.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// A directory written by `build`.
    #[arg(long)]
    pub split: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// test or val
    #[arg(long, default_value = "test")]
    pub part: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlArgs {
    #[command(flatten)]
    pub source: DataSource,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// lc or random
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub seed_labeled: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "TRIAGE_DATA_DIR")]
    pub data_dir: PathBuf,
    #[arg(long, env = "TRIAGE_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Seed a new data directory from this labeled corpus.
    #[arg(long)]
    pub init_corpus: Option<PathBuf>,
    #[arg(long)]
    pub seed_labeled: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub selection: SelectionArgs,
    /// Train the initial model at startup instead of at the first step.
    #[arg(long)]
    pub train_initial: bool,
}

/// Manifest written next to a split by `build`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitManifest {
    pub selection: SelectionConfig,
    pub summary: BuildSummary,
    pub sizes: [usize; 3],
}

struct Context {
    config: RunConfig,
    labels: LabelRegistry,
}

fn context(cli: &Cli) -> Result<Context, CliError> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.unwrap_or(config.seed);
    config.apply_seed(seed);
    let labels = match &cli.labels {
        Some(p) => LabelRegistry::read_label_file(p)?,
        None => default_registry(),
    };
    Ok(Context { config, labels })
}

fn parse<T: std::str::FromStr>(flag: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| invalid(format!("--{flag}: {e}")))
}

fn apply_selection(sel: &mut SelectionConfig, args: &SelectionArgs) -> Result<(), CliError> {
    if let Some(n) = args.min_chars {
        sel.min_chars = n;
    }
    if let Some(d) = &args.dataset {
        sel.dataset_kind = parse::<DatasetKind>("dataset", d)?;
    }
    if let Some(t) = &args.template {
        sel.template = parse::<TemplateId>("template", t)?;
    }
    if let Some(r) = &args.ratios {
        let [train, val, test] = r[..] else {
            return Err(invalid("--ratios takes three comma-separated fractions"));
        };
        sel.split_ratios = SplitRatios { train, val, test };
    }
    sel.validate()?;
    Ok(())
}

fn apply_model(trainer: &mut TrainerConfig, args: &ModelArgs) -> Result<(), CliError> {
    if let Some(m) = &args.model {
        trainer.model = parse::<ModelKind>("model", m)?;
    }
    if let Some(f) = &args.features {
        trainer.features = parse::<FeatureKind>("features", f)?;
    }
    if let Some(c) = args.vocab_cap {
        trainer.vocab_cap = c;
    }
    Ok(())
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn to_json(value: &impl Serialize) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

/// Loads or builds a split. With `--split`, the stored template must agree
/// with any requested one.
fn load_data(
    source: &DataSource,
    selection: &mut SelectionConfig,
    requested_template: bool,
    labels: &LabelRegistry,
) -> Result<DatasetSplit, CliError> {
    match (&source.corpus, &source.split) {
        (Some(corpus), None) => {
            let tickets = load_corpus(corpus, labels)?;
            Ok(build_dataset(&tickets, selection, labels)?)
        }
        (None, Some(dir)) => {
            let manifest: SplitManifest = serde_json::from_slice(&fs::read(dir.join("split.json"))?)
                .map_err(|e| invalid(format!("{}: {e}", dir.join("split.json").display())))?;
            if requested_template && manifest.selection.template != selection.template {
                return Err(invalid(format!(
                    "--template {} does not match the split, which was built with template {}",
                    selection.template, manifest.selection.template
                )));
            }
            *selection = manifest.selection.clone();
            let mut split = read_split(dir, labels, manifest.selection.seed)?;
            split.summary = manifest.summary;
            Ok(split)
        }
        _ => Err(invalid("give exactly one of --corpus or --split")),
    }
}

fn pairs(examples: &[Example]) -> Vec<(String, crate::corpus::LabelId)> {
    examples.iter().map(|e| (e.input_text.clone(), e.label)).collect()
}

fn model_name(trainer: &TrainerConfig) -> String {
    match trainer.model {
        ModelKind::Mlp => "mlp-hashing".into(),
        kind => format!("{kind}-{}", trainer.features),
    }
}

fn write_report(dir: &Path, name: &str, report: &EvalReport) -> Result<(), CliError> {
    write_file(&dir.join("report.json"), to_json(report))?;
    write_file(&dir.join("per_class.csv"), report.per_class_csv())?;
    write_file(&dir.join("table.csv"), format!("{}\n{}\n", EvalReport::TABLE_HEADER, report.table_row(name)))?;
    Ok(())
}

fn cmd_synth(ctx: Context, args: &SynthArgs) -> Result<(), CliError> {
    let mut cfg = ctx.config.synth;
    if let Some(n) = args.tickets {
        cfg.ticket_count = n;
    }
    if let Some(k) = args.label_count {
        cfg.label_count = k;
    }
    if let Some(f) = args.machine_fraction {
        cfg.machine_fraction = f;
    }
    if let Some(p) = args.short_first_prob {
        cfg.short_first_update_prob = p;
    }
    if let Some(p) = &args.placement {
        cfg.signal_placement = parse::<SignalPlacement>("placement", p)?;
    }
    if let Some(r) = args.noise {
        cfg.noise_token_rate = r;
    }
    let mut labels = ctx.labels;
    while labels.len() < cfg.label_count {
        labels = labels.extended(&format!("Label {}", labels.len()))?;
    }
    let tickets = generate(&cfg, &labels)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    save_corpus(&args.out, &tickets, &labels)?;
    println!("wrote {} tickets to {}", tickets.len(), args.out.display());
    Ok(())
}

fn cmd_clean(args: &CleanArgs) -> Result<(), CliError> {
    let mut raw = String::new();
    match args.input.as_deref() {
        Some(p) if p != Path::new("-") => raw = fs::read_to_string(p)?,
        _ => {
            std::io::stdin().read_to_string(&mut raw)?;
        }
    }
    let c = clean(&raw);
    if args.json {
        println!("{}", serde_json::to_string(&c).expect("serializable"));
    } else if args.tokens {
        println!("{}", tokenize_for_bag(&c).tokens.join(" "));
    } else {
        println!("{}", c.text);
    }
    Ok(())
}

fn cmd_report(ctx: Context, args: &ReportArgs) -> Result<(), CliError> {
    if args.thresholds.is_empty() {
        return Err(invalid("--thresholds must not be empty"));
    }
    let tickets = load_corpus(&args.corpus, &ctx.labels)?;
    let csv = update_frequency_report(&tickets, &args.thresholds).to_csv();
    match &args.out {
        Some(p) => write_file(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_build(ctx: Context, args: &BuildArgs) -> Result<(), CliError> {
    let mut sel = ctx.config.selection;
    apply_selection(&mut sel, &args.selection)?;
    let tickets = load_corpus(&args.corpus, &ctx.labels)?;
    let split = build_dataset(&tickets, &sel, &ctx.labels)?;
    write_split(&args.out, &split, &ctx.labels)?;
    ctx.labels.write_label_file(&args.out.join("labels.txt"))?;
    let manifest = SplitManifest {
        selection: sel,
        summary: split.summary,
        sizes: [split.train.len(), split.val.len(), split.test.len()],
    };
    write_file(&args.out.join("split.json"), to_json(&manifest))?;
    println!(
        "kept {} of {} tickets: train {}, val {}, test {}",
        split.summary.kept,
        split.summary.tickets,
        split.train.len(),
        split.val.len(),
        split.test.len()
    );
    Ok(())
}

fn cmd_train(ctx: Context, args: &TrainArgs) -> Result<(), CliError> {
    let mut sel = ctx.config.selection;
    apply_selection(&mut sel, &args.selection)?;
    let split = load_data(&args.source, &mut sel, args.selection.template.is_some(), &ctx.labels)?;
    let mut trainer = ctx.config.trainer;
    apply_model(&mut trainer, &args.model)?;
    trainer.template = sel.template;
    let artifact = train_classifier(&trainer, &pairs(&split.train), &ctx.labels, None, 0)?;
    save_artifact(&artifact, &args.out.join("artifact.json"))?;
    let predictor = Predictor::new(artifact, None)?;
    let report = evaluate(&predictor, &pairs(&split.test), &ctx.labels)?;
    write_report(&args.out, &model_name(&trainer), &report)?;
    println!("{}\n{}", EvalReport::TABLE_HEADER, report.table_row(&model_name(&trainer)));
    Ok(())
}

fn cmd_eval(ctx: Context, args: &EvalArgs) -> Result<(), CliError> {
    let artifact = load_artifact(&args.artifact)?;
    let name = model_name(&artifact.config);
    let examples = match args.part.as_str() {
        "test" => crate::builder::read_examples(&args.split.join("test.jsonl"), &ctx.labels)?,
        "val" => crate::builder::read_examples(&args.split.join("val.jsonl"), &ctx.labels)?,
        other => return Err(invalid(format!("--part must be test or val, got `{other}`"))),
    };
    let predictor = Predictor::new(artifact, None)?;
    let data = pairs(&examples);
    let report = evaluate(&predictor, &data, &ctx.labels)?;
    write_report(&args.out, &name, &report)?;
    let texts: Vec<String> = data.iter().map(|(t, _)| t.clone()).collect();
    let golds: Vec<_> = data.iter().map(|(_, l)| *l).collect();
    let probs = if texts.is_empty() { Vec::new() } else { predictor.predict_batch(&texts)? };
    write_file(&args.out.join("roc.csv"), roc_curves_csv(&golds, &probs, &ctx.labels)?)?;
    write_file(&args.out.join("pr.csv"), pr_curves_csv(&golds, &probs, &ctx.labels)?)?;
    println!("{}\n{}", EvalReport::TABLE_HEADER, report.table_row(&name));
    Ok(())
}

/// Seed, pool and validation sets for active learning from a split.
pub fn al_pool(split: &DatasetSplit, seed_labeled: usize) -> Result<(PoolState, SimulatedOracle), ActiveError> {
    let n = seed_labeled.min(split.train.len());
    let labeled = split.train[..n]
        .iter()
        .map(|e| LabeledInstance { id: e.ticket_id.clone(), text: e.input_text.clone(), label: e.label })
        .collect();
    let unlabeled = split.train[n..].iter().map(|e| Instance { id: e.ticket_id.clone(), text: e.input_text.clone() }).collect();
    let gold: HashMap<String, _> = split.train[n..].iter().map(|e| (e.ticket_id.clone(), e.label)).collect();
    Ok((PoolState::new(labeled, unlabeled)?, SimulatedOracle::new(gold)))
}

fn cmd_al(ctx: Context, args: &AlArgs) -> Result<(), CliError> {
    let mut sel = ctx.config.selection;
    apply_selection(&mut sel, &args.selection)?;
    let split = load_data(&args.source, &mut sel, args.selection.template.is_some(), &ctx.labels)?;
    let mut trainer = ctx.config.trainer;
    apply_model(&mut trainer, &args.model)?;
    trainer.template = sel.template;
    let mut active = ctx.config.active;
    if let Some(s) = &args.sampler {
        active.sampler = parse::<Sampler>("sampler", s)?;
    }
    if let Some(k) = args.k {
        active.k = k;
    }
    if let Some(r) = args.rounds {
        active.rounds = r;
    }
    if let Some(n) = args.seed_labeled {
        active.seed_labeled = n;
    }
    if active.k == 0 {
        return Err(invalid("--k must be at least 1"));
    }
    if active.seed_labeled == 0 {
        return Err(invalid("--seed-labeled must be at least 1"));
    }
    let (state, mut oracle) = al_pool(&split, active.seed_labeled)?;
    fs::create_dir_all(args.out.join("artifacts"))?;
    let mut learner = ActiveLearner::new(state, trainer, ctx.labels.clone(), pairs(&split.val), ctx.config.seed)
        .with_artifact_dir(args.out.join("artifacts"));
    let rounds_path = args.out.join("rounds.jsonl");
    let metrics_path = args.out.join("metrics.jsonl");
    fs::write(&rounds_path, "")?;
    let mut metrics = Vec::new();
    let initial = learner.fit_initial()?;
    println!("round 0: labeled {} val macro-F1 {:.4}", initial.labeled, initial.val_macro_f1);
    metrics.push(learner.last_report.clone());
    for _ in 0..active.rounds {
        if learner.state.unlabeled.is_empty() {
            break;
        }
        let record = learner.step(active.sampler, active.k, &mut oracle)?;
        append_round(&rounds_path, &record)?;
        metrics.push(learner.last_report.clone());
        println!("round {}: labeled {} val macro-F1 {:.4}", record.iteration, record.labeled, record.val_macro_f1);
    }
    let mut lines = String::new();
    for m in metrics.into_iter().flatten() {
        lines.push_str(&serde_json::to_string(&m).expect("serializable"));
        lines.push('\n');
    }
    fs::write(metrics_path, lines)?;
    Ok(())
}

fn cmd_serve(ctx: Context, args: &ServeArgs) -> Result<(), CliError> {
    let mut service_cfg = ctx.config.service.clone();
    apply_model(&mut service_cfg.trainer, &args.model)?;
    let service = if args.data_dir.join("service.json").exists() {
        if args.init_corpus.is_some() {
            return Err(invalid(format!("{} is already initialized", args.data_dir.display())));
        }
        Service::open(&args.data_dir)?
    } else {
        let Some(corpus) = &args.init_corpus else {
            return Err(invalid(format!(
                "{} holds no service; pass --init-corpus to create one",
                args.data_dir.display()
            )));
        };
        let mut sel = ctx.config.selection;
        apply_selection(&mut sel, &args.selection)?;
        service_cfg.trainer.template = sel.template;
        let tickets = load_corpus(corpus, &ctx.labels)?;
        let seed_labeled = args.seed_labeled.unwrap_or(ctx.config.active.seed_labeled);
        Service::create_from_corpus(&args.data_dir, &service_cfg, &ctx.labels, &tickets, &sel, seed_labeled)?
    };
    let mut service = service;
    if args.train_initial {
        service.train_initial()?;
    }
    let addr: SocketAddr =
        format!("{}:{}", args.host, args.port).parse().map_err(|e| invalid(format!("--host/--port: {e}")))?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(crate::service::serve(service, addr))?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = context(&cli)?;
    match &cli.command {
        Command::Synth(a) => cmd_synth(ctx, a),
        Command::Clean(a) => cmd_clean(a),
        Command::ReportUpdates(a) => cmd_report(ctx, a),
        Command::Build(a) => cmd_build(ctx, a),
        Command::Train(a) => cmd_train(ctx, a),
        Command::Eval(a) => cmd_eval(ctx, a),
        Command::AlRun(a) => cmd_al(ctx, a),
        Command::Serve(a) => cmd_serve(ctx, a),
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
