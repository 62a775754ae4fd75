//! Ticket domain model, the append-only label registry, and JSONL ingestion.
//!
//! Corpus files hold one ticket per line:
//!
//! ```text
//! {"ticket_id": "...", "title": "...", "summary": "...", "label": "Buildout" | null,
//!  "updates": [{"index": 1, "timestamp": "2020-05-26T00:00:00Z", "author": "human", "description": "..."}]}
//! ```
//!
//! Gold labels are stored by name and resolved against a [`LabelRegistry`] on load.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label names in id order, as used by the Azure hardware ticket taxonomy.
pub const DEFAULT_LABELS: [&str; 10] = [
    "Buildout",
    "GDCO Escalation",
    "SKU Artifacts",
    "Customer Facing RCA",
    "CloudNet FPGA Alerts",
    "Capacity Recovery Requests",
    "ECO Request",
    "Anvil Rate",
    "Firmware Deployment",
    "Attestation",
];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate ticket id `{0}`")]
    DuplicateTicketId(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("label `{0}` already exists in the registry")]
    DuplicateLabelName(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Who wrote a description update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Author {
    Human,
    Machine,
}

impl Author {
    pub fn as_str(self) -> &'static str {
        match self {
            Author::Human => "human",
            Author::Machine => "machine",
        }
    }
}

impl fmt::Display for Author {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense label index into a [`LabelRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelId(pub usize);

impl LabelId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for LabelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One revision of a ticket description (the i-th update, 1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicketUpdate {
    pub index: u32,
    pub timestamp: DateTime<Utc>,
    pub author: Author,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTicket {
    pub ticket_id: String,
    pub title: String,
    pub summary: String,
    /// Ordered by `index`, always exactly `1..=m`.
    pub updates: Vec<TicketUpdate>,
    pub gold_label: Option<LabelId>,
}

impl RawTicket {
    /// Number of description updates (`m`).
    pub fn update_count(&self) -> usize {
        self.updates.len()
    }
}

/// Ordered label names; the position of a name is its id.
///
/// Registries only grow. Extending never renumbers an existing label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRegistry {
    names: Vec<String>,
    /// Number of extensions applied on top of the initial label set.
    frozen_at: u32,
}

impl Default for LabelRegistry {
    fn default() -> Self {
        default_registry()
    }
}

/// The ten-label incident taxonomy, ids 0 through 9.
pub fn default_registry() -> LabelRegistry {
    LabelRegistry {
        names: DEFAULT_LABELS.iter().map(|s| s.to_string()).collect(),
        frozen_at: 0,
    }
}

/// Appends `name` as label `K`, leaving every existing id untouched.
pub fn extend_registry(registry: &LabelRegistry, name: &str) -> Result<LabelRegistry, CorpusError> {
    registry.extended(name)
}

impl LabelRegistry {
    pub fn from_names<I, S>(names: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut registry = LabelRegistry { names: Vec::new(), frozen_at: 0 };
        for name in names {
            let name = name.into();
            if registry.id_of(&name).is_some() {
                return Err(CorpusError::DuplicateLabelName(name));
            }
            registry.names.push(name);
        }
        Ok(registry)
    }

    pub fn extended(&self, name: &str) -> Result<Self, CorpusError> {
        if self.id_of(name).is_some() {
            return Err(CorpusError::DuplicateLabelName(name.to_string()));
        }
        let mut next = self.clone();
        next.names.push(name.to_string());
        next.frozen_at += 1;
        Ok(next)
    }

    /// Label count `K`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn frozen_at(&self) -> u32 {
        self.frozen_at
    }

    pub fn id_of(&self, name: &str) -> Option<LabelId> {
        self.names.iter().position(|n| n == name).map(LabelId)
    }

    pub fn name(&self, id: LabelId) -> Option<&str> {
        self.names.get(id.0).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn entries(&self) -> impl Iterator<Item = (LabelId, &str)> {
        self.names.iter().enumerate().map(|(i, n)| (LabelId(i), n.as_str()))
    }

    pub fn contains(&self, id: LabelId) -> bool {
        id.0 < self.names.len()
    }

    /// Reads a label file: one name per line, line number is the id.
    pub fn read_label_file(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path)?;
        Self::from_names(text.lines().map(str::trim_end).filter(|l| !l.is_empty()))
    }

    pub fn write_label_file(&self, path: &Path) -> Result<(), CorpusError> {
        let mut out = String::new();
        for name in &self.names {
            out.push_str(name);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// On-disk ticket record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TicketRecord {
    pub ticket_id: String,
    pub title: String,
    #[serde(default)]
    pub summary: Option<String>,
    #[serde(default)]
    pub label: Option<String>,
    pub updates: Vec<TicketUpdate>,
}

impl TicketRecord {
    pub fn from_ticket(ticket: &RawTicket, registry: &LabelRegistry) -> Self {
        TicketRecord {
            ticket_id: ticket.ticket_id.clone(),
            title: ticket.title.clone(),
            summary: Some(ticket.summary.clone()),
            label: ticket.gold_label.and_then(|id| registry.name(id)).map(str::to_string),
            updates: ticket.updates.clone(),
        }
    }
}

fn validate_record(
    record: TicketRecord,
    line: usize,
    registry: &LabelRegistry,
) -> Result<RawTicket, CorpusError> {
    let malformed = |reason: String| CorpusError::MalformedRecord { line, reason };
    if record.ticket_id.is_empty() {
        return Err(malformed("empty ticket_id".into()));
    }
    if record.updates.is_empty() {
        return Err(malformed("ticket has no updates".into()));
    }
    let mut updates = record.updates;
    updates.sort_by_key(|u| u.index);
    for (pos, update) in updates.iter().enumerate() {
        let expected = pos as u32 + 1;
        if update.index != expected {
            return Err(malformed(format!(
                "update indices must be consecutive from 1; expected {expected}, found {}",
                update.index
            )));
        }
    }
    if let Some(w) = updates.windows(2).find(|w| w[1].timestamp < w[0].timestamp) {
        return Err(malformed(format!("timestamp of update {} precedes update {}", w[1].index, w[0].index)));
    }
    let gold_label = match record.label {
        None => None,
        Some(name) => Some(registry.id_of(&name).ok_or(CorpusError::UnknownLabel(name))?),
    };
    Ok(RawTicket {
        ticket_id: record.ticket_id,
        title: record.title,
        summary: record.summary.unwrap_or_default(),
        updates,
        gold_label,
    })
}

/// Parses a JSONL corpus from any reader. Blank lines are skipped.
pub fn read_corpus<R: Read>(reader: R, registry: &LabelRegistry) -> Result<Vec<RawTicket>, CorpusError> {
    let mut seen = HashSet::new();
    let mut tickets = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: TicketRecord = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
            line: lineno,
            reason: e.to_string(),
        })?;
        let ticket = validate_record(record, lineno, registry)?;
        if !seen.insert(ticket.ticket_id.clone()) {
            return Err(CorpusError::DuplicateTicketId(ticket.ticket_id));
        }
        tickets.push(ticket);
    }
    Ok(tickets)
}

pub fn load_corpus(path: &Path, registry: &LabelRegistry) -> Result<Vec<RawTicket>, CorpusError> {
    read_corpus(fs::File::open(path)?, registry)
}

pub fn write_corpus<W: Write>(
    mut writer: W,
    tickets: &[RawTicket],
    registry: &LabelRegistry,
) -> Result<(), CorpusError> {
    for ticket in tickets {
        let record = TicketRecord::from_ticket(ticket, registry);
        serde_json::to_writer(&mut writer, &record).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_corpus(path: &Path, tickets: &[RawTicket], registry: &LabelRegistry) -> Result<(), CorpusError> {
    let file = fs::File::create(path)?;
    write_corpus(std::io::BufWriter::new(file), tickets, registry)
}
