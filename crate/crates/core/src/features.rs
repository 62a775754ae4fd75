//! Prompt-prefix composition, vocabulary construction and sparse bag features.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::{CleanText, TokenList, tokenize_text};

/// Default vocabulary cap for bag features.
pub const DEFAULT_VOCAB_CAP: usize = 1024;

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("description is empty")]
    EmptyDescription,
    #[error("unknown template `{0}` (expected 1, 2 or 3)")]
    UnknownTemplate(String),
    #[error("unknown feature encoding `{0}` (expected bow or tfidf)")]
    UnknownEncoding(String),
}

/// Input layout: which auxiliary fields are prefixed to the description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum TemplateId {
    /// `[CLS] description`
    #[default]
    DescOnly = 1,
    /// `[CLS] title [SEP] description`
    TitleDesc = 2,
    /// `[CLS] title [SEP] summary [SEP] description`
    TitleSummaryDesc = 3,
}

impl TryFrom<u8> for TemplateId {
    type Error = FeatureError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(TemplateId::DescOnly),
            2 => Ok(TemplateId::TitleDesc),
            3 => Ok(TemplateId::TitleSummaryDesc),
            other => Err(FeatureError::UnknownTemplate(other.to_string())),
        }
    }
}

impl From<TemplateId> for u8 {
    fn from(t: TemplateId) -> u8 {
        t as u8
    }
}

impl FromStr for TemplateId {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .parse::<u8>()
            .map_err(|_| FeatureError::UnknownTemplate(s.to_string()))
            .and_then(TemplateId::try_from)
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// Composes the model input for one ticket.
///
/// Empty title or summary slots stay in place; the separators are always
/// emitted so that every template has a fixed shape.
pub fn compose(
    template: TemplateId,
    title: &CleanText,
    summary: &CleanText,
    description: &CleanText,
) -> Result<String, FeatureError> {
    compose_str(template, &title.text, &summary.text, &description.text)
}

pub fn compose_str(
    template: TemplateId,
    title: &str,
    summary: &str,
    description: &str,
) -> Result<String, FeatureError> {
    if description.is_empty() {
        return Err(FeatureError::EmptyDescription);
    }
    Ok(match template {
        TemplateId::DescOnly => format!("{CLS} {description}"),
        TemplateId::TitleDesc => format!("{CLS} {title} {SEP} {description}"),
        TemplateId::TitleSummaryDesc => format!("{CLS} {title} {SEP} {summary} {SEP} {description}"),
    })
}

/// Bag feature weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    #[default]
    Bow,
    Tfidf,
}

impl FromStr for FeatureKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bow" => Ok(FeatureKind::Bow),
            "tfidf" | "tf-idf" => Ok(FeatureKind::Tfidf),
            _ => Err(FeatureError::UnknownEncoding(s.to_string())),
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Bow => "bow",
            FeatureKind::Tfidf => "tfidf",
        })
    }
}

/// Sorted sparse vector. Indices strictly increase, zero weights are never stored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn empty(dim: usize) -> Self {
        SparseVector { dim, entries: Vec::new() }
    }

    /// Builds a vector from unordered pairs; duplicate indices are summed and
    /// zeros dropped. Panics if an index is out of range.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, w) in pairs {
            assert!(i < dim, "index {i} out of range for dimension {dim}");
            *acc.entry(i).or_insert(0.0) += w;
        }
        SparseVector {
            dim,
            entries: acc.into_iter().filter(|&(_, w)| w != 0.0).collect(),
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            dim: values.len(),
            entries: values.iter().copied().enumerate().filter(|&(_, w)| w != 0.0).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            out[i] = w;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub t: String,
    pub df: u32,
}

/// Capped vocabulary with document frequencies.
///
/// Serialized as `{"cap": .., "N": .., "tokens": [{"t": .., "df": ..}]}` in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    cap: usize,
    doc_count: u32,
    tokens: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    cap: usize,
    #[serde(rename = "N")]
    n: u32,
    tokens: Vec<VocabEntry>,
}

impl From<VocabularyFile> for Vocabulary {
    fn from(f: VocabularyFile) -> Self {
        Vocabulary::from_entries(f.cap, f.n, f.tokens)
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile { cap: v.cap, n: v.doc_count, tokens: v.tokens }
    }
}

impl Vocabulary {
    fn from_entries(cap: usize, doc_count: u32, tokens: Vec<VocabEntry>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, e)| (e.t.clone(), i)).collect();
        Vocabulary { cap, doc_count, tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Number of documents the vocabulary was built from (`N`).
    pub fn doc_count(&self) -> u32 {
        self.doc_count
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(|e| e.t.as_str())
    }

    pub fn df(&self, index: usize) -> u32 {
        self.tokens[index].df
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.tokens
    }

    /// Smoothed inverse document frequency, `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        let n = f64::from(self.doc_count);
        let df = f64::from(self.tokens[index].df);
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }
}

/// Keeps the `cap` tokens with the highest document frequency (ties broken
/// lexicographically) and indexes them in lexicographic order.
pub fn build_vocabulary(docs: &[TokenList], cap: usize) -> Vocabulary {
    let mut df: HashMap<&str, u32> = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.iter().collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(&str, u32)> = df.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(cap);
    ranked.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let tokens = ranked
        .into_iter()
        .map(|(t, df)| VocabEntry { t: t.to_string(), df })
        .collect();
    Vocabulary::from_entries(cap, docs.len() as u32, tokens)
}

/// Binary presence encoding; out-of-vocabulary tokens are ignored.
pub fn bow_encode(doc: &TokenList, vocab: &Vocabulary) -> SparseVector {
    let mut idx: Vec<usize> = doc.iter().filter_map(|t| vocab.index_of(t)).collect();
    idx.sort_unstable();
    idx.dedup();
    SparseVector {
        dim: vocab.len(),
        entries: idx.into_iter().map(|i| (i, 1.0)).collect(),
    }
}

/// Raw term count times smoothed idf, L2-normalized.
pub fn tfidf_encode(doc: &TokenList, vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for i in doc.iter().filter_map(|t| vocab.index_of(t)) {
        *counts.entry(i).or_insert(0.0) += 1.0;
    }
    let mut entries: Vec<(usize, f64)> = counts.into_iter().map(|(i, tf)| (i, tf * vocab.idf(i))).collect();
    let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for e in &mut entries {
            e.1 /= norm;
        }
    }
    SparseVector { dim: vocab.len(), entries }
}

/// Vocabulary plus weighting: maps composed text to a sparse vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagFeaturizer {
    pub kind: FeatureKind,
    pub vocabulary: Vocabulary,
}

impl BagFeaturizer {
    pub fn fit<S: AsRef<str>>(texts: &[S], kind: FeatureKind, cap: usize) -> Self {
        let docs: Vec<TokenList> = texts.iter().map(|t| tokenize_text(t.as_ref())).collect();
        BagFeaturizer { kind, vocabulary: build_vocabulary(&docs, cap) }
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn encode_tokens(&self, doc: &TokenList) -> SparseVector {
        match self.kind {
            FeatureKind::Bow => bow_encode(doc, &self.vocabulary),
            FeatureKind::Tfidf => tfidf_encode(doc, &self.vocabulary),
        }
    }

    pub fn encode(&self, text: &str) -> SparseVector {
        self.encode_tokens(&tokenize_text(text))
    }
}
