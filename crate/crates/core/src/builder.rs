//! Representative-update selection, D-Human/D-Machine/D-Mixture assembly,
//! seeded splits, and the update-frequency table.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Author, LabelId, LabelRegistry, RawTicket};
use crate::features::{FeatureError, TemplateId, compose};
use crate::preprocess::{CleanText, clean};

pub const DEFAULT_MIN_CHARS: usize = 50;
/// Thresholds reported in the update-frequency table.
pub const REPORT_THRESHOLDS: [usize; 5] = [10, 20, 50, 100, 200];

const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("ticket `{0}` has no update with at least {1} cleaned characters")]
    NoEligibleUpdate(String, usize),
    #[error("no ticket survived selection and author filtering")]
    EmptyDataset,
    #[error("ticket `{0}` has no gold label")]
    MissingLabel(String),
    #[error("invalid selection config: {0}")]
    InvalidConfig(String),
    #[error("line {line} of {file}: {reason}")]
    MalformedSplit { file: String, line: usize, reason: String },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum DatasetKind {
    DHuman,
    DMachine,
    #[default]
    DMixture,
}

impl DatasetKind {
    pub fn accepts(self, author: Author) -> bool {
        match self {
            DatasetKind::DHuman => author == Author::Human,
            DatasetKind::DMachine => author == Author::Machine,
            DatasetKind::DMixture => true,
        }
    }
}

impl FromStr for DatasetKind {
    type Err = BuildError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "dhuman" | "human" => Ok(DatasetKind::DHuman),
            "dmachine" | "machine" => Ok(DatasetKind::DMachine),
            "dmixture" | "mixture" => Ok(DatasetKind::DMixture),
            _ => Err(BuildError::InvalidConfig(format!("unknown dataset kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    /// 72/8/20, the proportions of the reference D-Human split.
    fn default() -> Self {
        SplitRatios { train: 0.72, val: 0.08, test: 0.20 }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<(), BuildError> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(BuildError::InvalidConfig("split ratios must be positive".into()));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > RATIO_TOLERANCE {
            return Err(BuildError::InvalidConfig(format!("split ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// Train and val get the floor of their share, test takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let floor = |r: f64| ((n as f64) * r + 1e-9).floor() as usize;
        let train = floor(self.train).min(n);
        let val = floor(self.val).min(n - train);
        (train, val, n - train - val)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    #[serde(default = "default_min_chars")]
    pub min_chars: usize,
    #[serde(default)]
    pub dataset_kind: DatasetKind,
    #[serde(default)]
    pub template: TemplateId,
    #[serde(default)]
    pub split_ratios: SplitRatios,
    #[serde(default)]
    pub seed: u64,
}

fn default_min_chars() -> usize {
    DEFAULT_MIN_CHARS
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            min_chars: DEFAULT_MIN_CHARS,
            dataset_kind: DatasetKind::DMixture,
            template: TemplateId::DescOnly,
            split_ratios: SplitRatios::default(),
            seed: 0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), BuildError> {
        if self.min_chars == 0 {
            return Err(BuildError::InvalidConfig("min_chars must be at least 1".into()));
        }
        self.split_ratios.validate()
    }
}

/// One composed model input drawn from a ticket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub ticket_id: String,
    pub input_text: String,
    pub label: LabelId,
    pub drawn_update_index: u32,
    pub author: Author,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub tickets: usize,
    pub dropped_short: usize,
    pub dropped_author: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub test: Vec<Example>,
    pub seed: u64,
    pub summary: BuildSummary,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Returns the first update whose cleaned description has at least `n` characters.
pub fn select_representative(ticket: &RawTicket, n: usize) -> Result<(u32, CleanText), BuildError> {
    ticket
        .updates
        .iter()
        .map(|u| (u.index, clean(&u.description)))
        .find(|(_, c)| c.char_len() >= n)
        .ok_or_else(|| BuildError::NoEligibleUpdate(ticket.ticket_id.clone(), n))
}

/// Selects, filters, composes, shuffles and partitions a labeled corpus.
pub fn build_dataset(
    corpus: &[RawTicket],
    cfg: &SelectionConfig,
    registry: &LabelRegistry,
) -> Result<DatasetSplit, BuildError> {
    cfg.validate()?;
    let mut summary = BuildSummary { tickets: corpus.len(), ..Default::default() };
    let mut examples = Vec::new();
    for ticket in corpus {
        let Ok((index, description)) = select_representative(ticket, cfg.min_chars) else {
            summary.dropped_short += 1;
            continue;
        };
        let author = ticket.updates[index as usize - 1].author;
        if !cfg.dataset_kind.accepts(author) {
            summary.dropped_author += 1;
            continue;
        }
        let label = ticket
            .gold_label
            .filter(|l| registry.contains(*l))
            .ok_or_else(|| BuildError::MissingLabel(ticket.ticket_id.clone()))?;
        let input_text = compose(cfg.template, &clean(&ticket.title), &clean(&ticket.summary), &description)?;
        examples.push(Example {
            ticket_id: ticket.ticket_id.clone(),
            input_text,
            label,
            drawn_update_index: index,
            author,
        });
    }
    if examples.is_empty() {
        return Err(BuildError::EmptyDataset);
    }
    summary.kept = examples.len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    examples.shuffle(&mut rng);
    let (n_train, n_val, _) = cfg.split_ratios.sizes(examples.len());
    let test = examples.split_off(n_train + n_val);
    let val = examples.split_off(n_train);
    Ok(DatasetSplit { train: examples, val, test, seed: cfg.seed, summary })
}

/// One line of `train.jsonl` / `val.jsonl` / `test.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub ticket_id: String,
    pub text: String,
    pub label: String,
    pub drawn_update: u32,
    pub author: Author,
}

pub fn write_examples<W: Write>(
    mut writer: W,
    examples: &[Example],
    registry: &LabelRegistry,
) -> Result<(), BuildError> {
    for ex in examples {
        let record = ExampleRecord {
            ticket_id: ex.ticket_id.clone(),
            text: ex.input_text.clone(),
            label: registry.name(ex.label).unwrap_or_default().to_string(),
            drawn_update: ex.drawn_update_index,
            author: ex.author,
        };
        serde_json::to_writer(&mut writer, &record).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_examples(path: &Path, registry: &LabelRegistry) -> Result<Vec<Example>, BuildError> {
    let file = path.display().to_string();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| BuildError::MalformedSplit { file: file.clone(), line: i + 1, reason };
        let rec: ExampleRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let label = registry
            .id_of(&rec.label)
            .ok_or_else(|| malformed(format!("unknown label `{}`", rec.label)))?;
        out.push(Example {
            ticket_id: rec.ticket_id,
            input_text: rec.text,
            label,
            drawn_update_index: rec.drawn_update,
            author: rec.author,
        });
    }
    Ok(out)
}

/// Writes `train.jsonl`, `val.jsonl` and `test.jsonl` into `dir`.
pub fn write_split(dir: &Path, split: &DatasetSplit, registry: &LabelRegistry) -> Result<(), BuildError> {
    fs::create_dir_all(dir)?;
    for (name, examples) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
        let file = fs::File::create(dir.join(format!("{name}.jsonl")))?;
        write_examples(std::io::BufWriter::new(file), examples, registry)?;
    }
    Ok(())
}

pub fn read_split(dir: &Path, registry: &LabelRegistry, seed: u64) -> Result<DatasetSplit, BuildError> {
    let train = read_examples(&dir.join("train.jsonl"), registry)?;
    let val = read_examples(&dir.join("val.jsonl"), registry)?;
    let test = read_examples(&dir.join("test.jsonl"), registry)?;
    let kept = train.len() + val.len() + test.len();
    Ok(DatasetSplit {
        train,
        val,
        test,
        seed,
        summary: BuildSummary { tickets: kept, kept, ..Default::default() },
    })
}

/// Percentages of representative updates drawn from T1..T5 and later, per threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub n: usize,
    /// Tickets with an eligible update (the denominator).
    pub eligible: usize,
    /// Tickets drawn from update 1, 2, 3, 4, 5 and any later one.
    pub counts: [usize; 6],
    pub percentages: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateFrequencyReport {
    pub thresholds: Vec<usize>,
    pub rows: Vec<FrequencyRow>,
}

impl UpdateFrequencyReport {
    /// CSV in the layout of the update-frequency table: one row per threshold.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,T1,T2,T3,T4,T5,others\n");
        for row in &self.rows {
            let _ = write!(out, "{}", row.n);
            for p in row.percentages {
                let _ = write!(out, ",{p:.1}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn update_frequency_report(corpus: &[RawTicket], thresholds: &[usize]) -> UpdateFrequencyReport {
    let rows = thresholds
        .iter()
        .map(|&n| {
            let mut counts = [0usize; 6];
            for ticket in corpus {
                if let Ok((index, _)) = select_representative(ticket, n) {
                    counts[(index as usize).min(6) - 1] += 1;
                }
            }
            let eligible: usize = counts.iter().sum();
            let mut percentages = [0.0; 6];
            if eligible > 0 {
                for (p, c) in percentages.iter_mut().zip(counts) {
                    *p = 100.0 * c as f64 / eligible as f64;
                }
            }
            FrequencyRow { n, eligible, counts, percentages }
        })
        .collect();
    UpdateFrequencyReport { thresholds: thresholds.to_vec(), rows }
}

/// Ticket ids shared between any two split parts (empty for a valid split).
pub fn overlapping_ids(split: &DatasetSplit) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut dup = Vec::new();
    for ex in split.train.iter().chain(&split.val).chain(&split.test) {
        if !seen.insert(ex.ticket_id.as_str()) {
            dup.push(ex.ticket_id.clone());
        }
    }
    dup
}
