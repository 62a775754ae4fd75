//! Labeled synthetic ticket corpora.
//!
//! Each label owns five disjoint keywords. Human tickets are written from a
//! loose sentence grammar with transition words and synonym slots; machine
//! tickets come from six fixed patterns. Keywords are placed in the
//! description, the title, or split between the two, and a configurable share
//! of keyword slots is replaced by keywords of other labels.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Author, LabelId, LabelRegistry, RawTicket, TicketUpdate};
use crate::preprocess::clean;

pub const KEYWORDS_PER_LABEL: usize = 5;

const DEFAULT_KEYWORDS: [[&str; KEYWORDS_PER_LABEL]; 10] = [
    ["buildout", "rack", "cabling", "commissioning", "provisioning"],
    ["gdco", "escalation", "technician", "dispatch", "workorder"],
    ["sku", "artifact", "manifest", "catalog", "bom"],
    ["rca", "customer", "postmortem", "outage", "impact"],
    ["fpga", "cloudnet", "bitstream", "pcie", "reprogram"],
    ["capacity", "recovery", "reclaim", "allocation", "quota"],
    ["eco", "engineering", "profile", "revision", "amendment"],
    ["anvil", "ratelimit", "throttle", "throughput", "limiter"],
    ["firmware", "bios", "flashing", "rollout", "bmc"],
    ["attestation", "tpm", "secureboot", "certificate", "measurement"],
];

const ACKS_HUMAN: [&str; 5] = [
    "Acknowledging incident",
    "incident acknowledged",
    "Taking a look now",
    "Assigned to on-call",
    "ack, investigating",
];
const ACKS_MACHINE: [&str; 3] = [
    "[automated] Incident acknowledged",
    "[automated] Ack received",
    "[automated] Routed to queue",
];

const GREETINGS: [&str; 5] = ["Hi team,", "Hello,", "@NAMEMASKED -", "Hi all,", "FYI,"];
const OPENERS: [&str; 6] = [
    "I have just taken this incident to determine next steps",
    "Assigning to you to begin investigation into this issue",
    "We looked into the affected nodes this morning",
    "This seems to have a lot of churn so we are hoping to reduce it",
    "Picking this up from the previous on-call rotation",
    "Our team reviewed the logs from the cluster",
];
const TRANSITIONS: [&str; 7] = ["However,", "Therefore,", "Since then,", "As a result,", "Meanwhile,", "After that,", "Because of this,"];
const SUBJECTS: [&str; 6] = ["the node", "the host", "the cluster", "the server", "the device", "the fleet segment"];
const VERBS: [&str; 6] = ["reported", "showed", "is blocked on", "keeps hitting", "was flagged for", "needs help with"];
const CLOSERS: [&str; 5] = [
    "please take a look when you get a chance",
    "please resolve if things are fine now",
    "we will keep monitoring and update this thread",
    "let us know if more details are required",
    "hence closing once validation passes",
];
const NOUNS: [&str; 8] = ["issue", "problem", "failure", "symptom", "error", "concern", "regression", "fault"];
const STATES: [&str; 4] = ["out-for-repair", "in production", "in maintenance", "unhealthy"];
const STATUSES: [&str; 3] = ["succeeded", "failed", "partially applied"];
const TITLE_STEMS: [&str; 6] = [
    "Incident on host",
    "Alert raised for node",
    "Investigation needed for cluster",
    "Issue reported on device",
    "Ticket opened for server",
    "Follow-up required on chassis",
];
const SUMMARY_STEMS: [&str; 4] = [
    "Engineers are tracking the incident and collecting logs from the affected hosts.",
    "Automation detected an anomaly and opened this ticket for triage.",
    "The incident is under investigation by the owning team.",
    "Status is being updated as mitigation progresses.",
];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
}

/// Where label-indicative keywords are injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SignalPlacement {
    #[default]
    DescriptionOnly,
    TitleOnly,
    /// The description only narrows the label down to a pair of labels; the
    /// title carries the keywords that tell the pair apart.
    SplitTitleDescription,
}

impl std::str::FromStr for SignalPlacement {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "descriptiononly" | "description" => Ok(SignalPlacement::DescriptionOnly),
            "titleonly" | "title" => Ok(SignalPlacement::TitleOnly),
            "splittitledescription" | "split" => Ok(SignalPlacement::SplitTitleDescription),
            _ => Err(SynthError::InvalidConfig(format!("unknown signal placement `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub ticket_count: usize,
    pub label_count: usize,
    pub machine_fraction: f64,
    pub short_first_update_prob: f64,
    pub signal_placement: SignalPlacement,
    pub noise_token_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            ticket_count: 1000,
            label_count: 10,
            machine_fraction: 0.5,
            short_first_update_prob: 0.65,
            signal_placement: SignalPlacement::DescriptionOnly,
            noise_token_rate: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, p) in [
            ("machine_fraction", self.machine_fraction),
            ("short_first_update_prob", self.short_first_update_prob),
            ("noise_token_rate", self.noise_token_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::InvalidConfig(format!("{name} must be within [0, 1], got {p}")));
            }
        }
        if self.label_count == 0 {
            return Err(SynthError::InvalidConfig("label_count must be at least 1".into()));
        }
        if self.ticket_count < self.label_count {
            return Err(SynthError::InvalidConfig(format!(
                "ticket_count ({}) must be at least label_count ({})",
                self.ticket_count, self.label_count
            )));
        }
        Ok(())
    }
}

/// The five keywords owned by `label`.
pub fn label_keywords(label: LabelId) -> Vec<String> {
    match DEFAULT_KEYWORDS.get(label.0) {
        Some(words) => words.iter().map(|w| w.to_string()).collect(),
        None => (0..KEYWORDS_PER_LABEL).map(|j| format!("lbl{}kw{j}", label.0)).collect(),
    }
}

/// The label whose keywords share the description under split placement.
pub fn partner_label(label: LabelId, label_count: usize) -> LabelId {
    let k = label.0;
    let partner = k ^ 1;
    if partner < label_count {
        LabelId(partner)
    } else if label_count > 1 {
        LabelId(k - 1)
    } else {
        label
    }
}

struct Generator<'a> {
    rng: ChaCha8Rng,
    cfg: &'a SynthConfig,
    keywords: Vec<Vec<String>>,
}

impl Generator<'_> {
    fn pick<'s>(&mut self, items: &'s [&'s str]) -> &'s str {
        items.choose(&mut self.rng).copied().unwrap_or("")
    }

    /// A keyword slot for `label`, replaced by another label's keyword at the noise rate.
    fn keyword(&mut self, label: usize) -> String {
        let k = self.keywords.len();
        let owner = if k > 1 && self.rng.random_bool(self.cfg.noise_token_rate) {
            let other = self.rng.random_range(0..k - 1);
            if other >= label { other + 1 } else { other }
        } else {
            label
        };
        self.keywords[owner].choose(&mut self.rng).cloned().unwrap_or_default()
    }

    fn keyword_phrase(&mut self, labels: &[usize], slots: usize) -> String {
        (0..slots)
            .map(|_| {
                let l = *labels.choose(&mut self.rng).unwrap();
                self.keyword(l)
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn host(&mut self) -> String {
        format!("{}{:03}", self.pick(&["bn4", "sn2", "co1", "am5", "dm3"]), self.rng.random_range(0..1000))
    }

    fn human_sentence(&mut self, phrase: Option<&str>) -> String {
        let subject = self.pick(&SUBJECTS);
        let verb = self.pick(&VERBS);
        let noun = self.pick(&NOUNS);
        let body = match phrase {
            Some(p) => format!("{subject} {verb} a {p} {noun}"),
            None => format!("{subject} {verb} an intermittent {noun}"),
        };
        match self.rng.random_range(0..4) {
            0 => format!("{} {body}.", self.pick(&TRANSITIONS)),
            1 => format!("{body}, {}.", self.pick(&CLOSERS)),
            2 => format!("{body} on {} since yesterday.", self.host()),
            _ => format!("{} {body}.", self.pick(&TRANSITIONS)).replace("  ", " "),
        }
    }

    fn decorate(&mut self, text: String) -> String {
        // occasional markup that cleaning is expected to strip
        match self.rng.random_range(0..8) {
            0 => format!("{text} See https://aka.ms/icm/{} for details.", self.rng.random_range(1000..9999)),
            1 => format!("<p>{text}</p>"),
            2 => format!("{text}\n```\nGet-NodeHealth -Id {}\n```", self.rng.random_range(1..99)),
            _ => text,
        }
    }

    fn human_update(&mut self, signal: Option<Vec<usize>>) -> String {
        let target = self.rng.random_range(60..260);
        let mut parts = vec![format!("{} {}.", self.pick(&GREETINGS), self.pick(&OPENERS))];
        let mut phrase = signal.map(|labels| {
            let slots = self.rng.random_range(2..=3);
            self.keyword_phrase(&labels, slots)
        });
        loop {
            let sentence = self.human_sentence(phrase.as_deref());
            parts.push(sentence);
            phrase = None;
            if clean(&parts.join(" ")).char_len() >= target {
                break;
            }
        }
        self.decorate(parts.join(" "))
    }

    fn machine_update(&mut self, signal: Option<Vec<usize>>) -> String {
        let phrase = match signal {
            Some(labels) => {
                let slots = self.rng.random_range(2..=3);
                self.keyword_phrase(&labels, slots)
            }
            None => "generic".to_string(),
        };
        let host = self.host();
        let text = match self.rng.random_range(0..6) {
            0 => format!(
                "[automated] Update: Node {host} is currently {}. Need to validate proper repair action for {phrase}.",
                self.pick(&STATES)
            ),
            1 => format!(
                "[automated] Update: This IcM has not been updated in the past {} days. Pending {phrase} validation.",
                self.rng.random_range(2..15)
            ),
            2 => format!("The severity in this IcM incident is inherited from the severity of the {phrase} ticket on {host}."),
            3 => format!(
                "[automated] Health check on host {host} reported {phrase} fault code {}.",
                self.rng.random_range(100..999)
            ),
            4 => format!("[automated] Alert fired for cluster {host}: {phrase} threshold exceeded for the monitored window."),
            _ => format!(
                "[automated] Mitigation workflow {} for {phrase} completed with status {} on {host}.",
                self.rng.random_range(10000..99999),
                self.pick(&STATUSES)
            ),
        };
        // machine text stays short of the long human tail but clears the usual thresholds
        if clean(&text).char_len() < 60 {
            format!("{text} No further action recorded by automation.")
        } else {
            text
        }
    }

    fn ticket(&mut self, i: usize, label: usize) -> RawTicket {
        let k = self.keywords.len();
        let author = if self.rng.random_bool(self.cfg.machine_fraction) { Author::Machine } else { Author::Human };
        let (title_signal, desc_signal) = match self.cfg.signal_placement {
            SignalPlacement::DescriptionOnly => (None, Some(vec![label])),
            SignalPlacement::TitleOnly => (Some(vec![label]), None),
            SignalPlacement::SplitTitleDescription => {
                let partner = partner_label(LabelId(label), k).0;
                (Some(vec![label]), Some(vec![label, partner]))
            }
        };

        let title = {
            let stem = self.pick(&TITLE_STEMS);
            let host = self.host();
            match title_signal {
                Some(labels) => {
                    let phrase = self.keyword_phrase(&labels, 2);
                    format!("{stem} {host}: {phrase}")
                }
                None => format!("{stem} {host}"),
            }
        };
        let summary = self.pick(&SUMMARY_STEMS).to_string();

        let short_first = self.rng.random_bool(self.cfg.short_first_update_prob);
        let m = if short_first { self.rng.random_range(2..=6) } else { self.rng.random_range(1..=6) };
        let start = Utc.with_ymd_and_hms(2020, 6, 1, 0, 0, 0).unwrap() + Duration::hours(i as i64 * 7);
        let mut ts = start;
        let mut updates = Vec::with_capacity(m);
        for idx in 1..=m {
            let description = if idx == 1 && short_first {
                match author {
                    Author::Human => self.pick(&ACKS_HUMAN).to_string(),
                    Author::Machine => self.pick(&ACKS_MACHINE).to_string(),
                }
            } else {
                match author {
                    Author::Human => self.human_update(desc_signal.clone()),
                    Author::Machine => self.machine_update(desc_signal.clone()),
                }
            };
            updates.push(TicketUpdate { index: idx as u32, timestamp: ts, author, description });
            ts += Duration::minutes(self.rng.random_range(5..60 * 24 * 5));
        }
        RawTicket {
            ticket_id: format!("INC{i:06}"),
            title,
            summary,
            updates,
            gold_label: Some(LabelId(label)),
        }
    }
}

/// Generates `cfg.ticket_count` labeled tickets. Labels are assigned
/// round-robin (so every label appears) and the ticket order is then shuffled.
pub fn generate(cfg: &SynthConfig, registry: &LabelRegistry) -> Result<Vec<RawTicket>, SynthError> {
    cfg.validate()?;
    if registry.len() < cfg.label_count {
        return Err(SynthError::InvalidConfig(format!(
            "registry has {} labels but label_count is {}",
            registry.len(),
            cfg.label_count
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut labels: Vec<usize> = (0..cfg.ticket_count).map(|i| i % cfg.label_count).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
    let keywords = (0..cfg.label_count).map(|l| label_keywords(LabelId(l))).collect();
    let mut generator = Generator { rng, cfg, keywords };
    Ok(labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| generator.ticket(i, label))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::update_frequency_report;
    use crate::corpus::{default_registry, write_corpus};
    use crate::preprocess::tokenize_text;
    use std::collections::HashSet;

    fn cfg(n: usize) -> SynthConfig {
        SynthConfig { ticket_count: n, seed: 1, ..Default::default() }
    }

    #[test]
    fn keyword_sets_are_disjoint_and_tokenizable() {
        let mut all = HashSet::new();
        for l in 0..12 {
            for w in label_keywords(LabelId(l)) {
                assert_eq!(tokenize_text(&w).tokens, vec![w.clone()], "keyword {w} must survive tokenization");
                assert!(all.insert(w));
            }
        }
    }

    #[test]
    fn second_update_share_tracks_short_first_probability() {
        let c = SynthConfig { ticket_count: 100, short_first_update_prob: 0.7, seed: 1, ..Default::default() };
        let corpus = generate(&c, &default_registry()).unwrap();
        let row = &update_frequency_report(&corpus, &[50]).rows[0];
        assert_eq!(row.eligible, 100);
        assert!((row.percentages[1] - 70.0).abs() <= 10.0, "T2 share {}", row.percentages[1]);
    }

    #[test]
    fn all_machine() {
        let c = SynthConfig { machine_fraction: 1.0, ..cfg(50) };
        let corpus = generate(&c, &default_registry()).unwrap();
        assert!(corpus.iter().flat_map(|t| &t.updates).all(|u| u.author == Author::Machine));
    }

    #[test]
    fn deterministic_under_seed() {
        let reg = default_registry();
        let bytes = |c: &SynthConfig| {
            let mut buf = Vec::new();
            write_corpus(&mut buf, &generate(c, &reg).unwrap(), &reg).unwrap();
            buf
        };
        assert_eq!(bytes(&cfg(40)), bytes(&cfg(40)));
        assert_ne!(bytes(&cfg(40)), bytes(&SynthConfig { seed: 2, ..cfg(40) }));
    }

    #[test]
    fn noiseless_descriptions_identify_their_label() {
        let corpus = generate(&cfg(200), &default_registry()).unwrap();
        let owners: Vec<HashSet<String>> = (0..10).map(|l| label_keywords(LabelId(l)).into_iter().collect()).collect();
        for t in &corpus {
            let label = t.gold_label.unwrap().0;
            for u in t.updates.iter().filter(|u| clean(&u.description).char_len() >= 30) {
                let tokens: HashSet<String> = tokenize_text(&clean(&u.description).text).tokens.into_iter().collect();
                let hits: Vec<usize> = (0..10).filter(|&l| !owners[l].is_disjoint(&tokens)).collect();
                assert_eq!(hits, vec![label], "update {:?}", u.description);
            }
            let title_tokens: HashSet<String> = tokenize_text(&clean(&t.title).text).tokens.into_iter().collect();
            assert!(owners.iter().all(|o| o.is_disjoint(&title_tokens)));
        }
    }

    #[test]
    fn every_label_present_and_structure_valid() {
        let corpus = generate(&cfg(30), &default_registry()).unwrap();
        let labels: HashSet<_> = corpus.iter().map(|t| t.gold_label.unwrap()).collect();
        assert_eq!(labels.len(), 10);
        for t in &corpus {
            assert!((1..=6).contains(&t.updates.len()));
            assert!(t.updates.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
            assert!(t.updates.iter().enumerate().all(|(i, u)| u.index as usize == i + 1));
        }
    }

    #[test]
    fn short_acks_are_short() {
        for a in ACKS_HUMAN.iter().chain(ACKS_MACHINE.iter()) {
            assert!(clean(a).char_len() < 30, "{a}");
        }
    }

    #[test]
    fn invalid_configs() {
        let reg = default_registry();
        assert!(generate(&SynthConfig { noise_token_rate: 1.5, ..cfg(20) }, &reg).is_err());
        assert!(generate(&SynthConfig { ticket_count: 5, ..cfg(20) }, &reg).is_err());
        assert!(generate(&SynthConfig { label_count: 11, ..cfg(20) }, &reg).is_err());
    }

    #[test]
    fn partner_pairs() {
        assert_eq!(partner_label(LabelId(0), 10), LabelId(1));
        assert_eq!(partner_label(LabelId(9), 10), LabelId(8));
        assert_eq!(partner_label(LabelId(10), 11), LabelId(9));
    }
}
