//! Text cleaning and bag-of-words tokenization.
//!
//! Cleaning removes, in order: code blocks, HTML tables, remaining HTML tags,
//! URLs, and brace/bracket metadata spans. The result is NFC-normalized,
//! lowercased and whitespace-collapsed. Stopwords are kept in cleaned text and
//! only dropped by [`tokenize_for_bag`].

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

const STOPWORDS_TXT: &str = include_str!("../data/stopwords.txt");

/// Longest `{...}` / `[...]` span (delimiters included) treated as metadata.
pub const MAX_BRACE_SPAN: usize = 200;

const MAX_PASSES: usize = 16;

static FENCED_CODE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)```.*?```|~~~.*?~~~").unwrap());
static INDENTED_CODE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)(?:\A|\n[ \t]*\n)((?:(?: {4}|\t)[^\n]*(?:\n|\z))+)").unwrap());
static INLINE_CODE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"`[^`\n]*`").unwrap());
static HTML_TABLE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<table\b[^>]*>.*?</table\s*>").unwrap());
static PIPE_TABLE_ROW: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*\|[^\n]*\|[ \t]*$").unwrap());
static HTML_COMMENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<!--.*?-->").unwrap());
static HTML_TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"</?[A-Za-z][A-Za-z0-9:-]*(?:\s[^<>]*)?/?>").unwrap());
static URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b[a-z][a-z0-9+.\-]*://\S*|\bwww\.\S+").unwrap()
});
static CURLY_SPAN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{[^{}]*\}").unwrap());
static SQUARE_SPAN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[[^\[\]]*\]").unwrap());
static SENTENCE_PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[.!?](?:\s|$)").unwrap());

static STOPWORDS: LazyLock<HashSet<String>> = LazyLock::new(|| parse_stopwords(STOPWORDS_TXT));

/// Per-rule removal counts, kept for auditing what cleaning threw away.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalCounts {
    pub urls: usize,
    pub code_blocks: usize,
    pub html_tags: usize,
    pub tables: usize,
    pub braces: usize,
}

impl RemovalCounts {
    pub fn total(&self) -> usize {
        self.urls + self.code_blocks + self.html_tags + self.tables + self.braces
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanText {
    pub text: String,
    pub removed: RemovalCounts,
}

impl CleanText {
    /// Length in characters, the unit the selection threshold uses.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenList {
    pub tokens: Vec<String>,
}

impl TokenList {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

fn strip(re: &Regex, text: &str, count: &mut usize) -> String {
    let mut n = 0;
    let out = re.replace_all(text, |_: &regex::Captures<'_>| {
        n += 1;
        " "
    });
    *count += n;
    out.into_owned()
}

fn strip_indented_code(text: &str, count: &mut usize) -> String {
    let mut n = 0;
    let out = INDENTED_CODE.replace_all(text, |caps: &regex::Captures<'_>| {
        n += 1;
        // keep the paragraph break that introduced the block
        let whole = caps.get(0).unwrap().as_str();
        let block = caps.get(1).unwrap().as_str();
        format!("{} ", &whole[..whole.len() - block.len()])
    });
    *count += n;
    out.into_owned()
}

fn is_metadata_span(span: &str) -> bool {
    let inner = &span[1..span.len() - 1];
    span.chars().count() <= MAX_BRACE_SPAN && !SENTENCE_PUNCT.is_match(inner)
}

fn strip_braces(text: &str, count: &mut usize) -> String {
    let mut current = text.to_string();
    loop {
        let mut n = 0;
        let mut replace = |re: &Regex, s: &str| {
            re.replace_all(s, |caps: &regex::Captures<'_>| {
                let span = caps.get(0).unwrap().as_str();
                if is_metadata_span(span) {
                    n += 1;
                    " ".to_string()
                } else {
                    span.to_string()
                }
            })
            .into_owned()
        };
        let next = replace(&CURLY_SPAN, &current);
        let next = replace(&SQUARE_SPAN, &next);
        *count += n;
        if n == 0 {
            return next;
        }
        current = next;
    }
}

fn normalize(text: &str) -> String {
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn clean_pass(raw: &str, removed: &mut RemovalCounts) -> String {
    let text = strip(&FENCED_CODE, raw, &mut removed.code_blocks);
    let text = strip_indented_code(&text, &mut removed.code_blocks);
    let text = strip(&INLINE_CODE, &text, &mut removed.code_blocks);
    let text = strip(&HTML_TABLE, &text, &mut removed.tables);
    let text = strip(&PIPE_TABLE_ROW, &text, &mut removed.tables);
    let text = strip(&HTML_COMMENT, &text, &mut removed.html_tags);
    let text = strip(&HTML_TAG, &text, &mut removed.html_tags);
    let text = strip(&URL, &text, &mut removed.urls);
    let text = strip_braces(&text, &mut removed.braces);
    normalize(&text)
}

/// Applies every cleaning rule until the text stops changing.
///
/// A single pass can expose new matches (for instance an inline code span
/// broken by a newline becomes contiguous after whitespace collapsing), so the
/// passes repeat to a fixpoint. Each pass only shrinks the text.
pub fn clean(raw: &str) -> CleanText {
    let mut removed = RemovalCounts::default();
    let mut text = clean_pass(raw, &mut removed);
    for _ in 1..MAX_PASSES {
        let next = clean_pass(&text, &mut removed);
        if next == text {
            break;
        }
        text = next;
    }
    CleanText { text, removed }
}

/// Parses a stopword file: one word per line, `#` starts a comment.
pub fn parse_stopwords(contents: &str) -> HashSet<String> {
    contents
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// The shipped English stopword list.
pub fn stopwords() -> &'static HashSet<String> {
    &STOPWORDS
}

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(token)
}

/// Splits text on non-alphanumeric boundaries, dropping tokens shorter than
/// two characters and stopwords.
pub fn tokenize_text(text: &str) -> TokenList {
    let tokens = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .filter(|t| !is_stopword(t))
        .collect();
    TokenList { tokens }
}

pub fn tokenize_for_bag(clean: &CleanText) -> TokenList {
    tokenize_text(&clean.text)
}

/// True when the cleaned text is shorter than `n` characters.
pub fn is_short(clean: &CleanText, n: usize) -> bool {
    clean.char_len() < n
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn strips_tags_and_urls() {
        assert_eq!(clean("Check <b>FPGA</b> at https://aka.ms/x").text, "check fpga at");
    }

    #[test]
    fn empty_input() {
        let c = clean("");
        assert_eq!(c.text, "");
        assert_eq!(c.removed, RemovalCounts::default());
    }

    #[test]
    fn tables_removed_wholesale() {
        let c = clean("Node <table><tr><td>r1</td></tr></table> down");
        assert_eq!(c.text, "node down");
        assert_eq!(c.removed.tables, 1);
        assert_eq!(c.removed.html_tags, 0);
    }

    #[test]
    fn code_blocks_removed() {
        let c = clean("Repro steps:\n```\nSELECT * FROM nodes;\n```\nthen reboot `sudo reboot` now");
        assert_eq!(c.text, "repro steps: then reboot now");
        assert_eq!(c.removed.code_blocks, 2);

        let c = clean("Trace below\n\n    at foo.bar()\n    at baz()\n\nAfter trace");
        assert_eq!(c.text, "trace below after trace");
    }

    #[test]
    fn www_urls_removed() {
        assert_eq!(clean("see www.example.com/a?b=1 for details").text, "see for details");
    }

    #[test]
    fn automated_marker_and_metadata_removed() {
        let c = clean("[automated] Update: Node is currently out-for-repair. {\"sev\":2,\"id\":7}");
        assert_eq!(c.text, "update: node is currently out-for-repair.");
        assert_eq!(c.removed.braces, 2);
    }

    #[test]
    fn bracketed_sentences_kept() {
        let c = clean("Rebooted [see the log. retry later] ok");
        assert_eq!(c.text, "rebooted [see the log. retry later] ok");
    }

    #[test]
    fn long_brace_spans_kept() {
        let inner = "x".repeat(MAX_BRACE_SPAN);
        let c = clean(&format!("a {{{inner}}} b"));
        assert!(c.text.contains(&inner));
    }

    #[test]
    fn nfc_and_case() {
        // decomposed e + combining acute
        assert_eq!(clean("CAFE\u{301}").text, "caf\u{e9}");
    }

    #[test]
    fn tokenize_examples() {
        let t = |s: &str| tokenize_for_bag(&clean(s)).tokens;
        assert_eq!(t("check fpga at"), vec!["check", "fpga"]);
        assert!(t("").is_empty());
        assert_eq!(t("node-42 rebooted"), vec!["node", "42", "rebooted"]);
    }

    #[test]
    fn short_threshold() {
        let c = clean("incident acknowledged");
        assert_eq!(c.char_len(), 21);
        assert!(is_short(&c, 50));
        assert!(!is_short(&c, 0));
        assert!(!is_short(&c, 21));
        assert!(is_short(&c, 22));
    }

    #[test]
    fn stopword_list_shape() {
        let words = stopwords();
        assert!(words.len() >= 170 && words.len() <= 200, "{}", words.len());
        assert!(words.contains("at"));
        assert!(!words.contains("fpga"));
        let parsed = parse_stopwords("# header\nThe\n\nand # trailing\n");
        assert_eq!(parsed.len(), 2);
        assert!(parsed.contains("the"));
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(s in "(?s)[ -~\n\t<>{}\\[\\]`/:]{0,120}") {
            let once = clean(&s).text;
            prop_assert_eq!(clean(&once).text, once);
        }

        #[test]
        fn no_rule_leakage(s in "(?s)(<b>|</i>|https://x.y/z|www.a.b|`c`|```|\\[m\\]|\\{k\\}|[a-z ]|\n){0,40}") {
            let out = clean(&s).text;
            prop_assert!(!URL.is_match(&out), "url left in {:?}", out);
            prop_assert!(!HTML_TAG.is_match(&out), "tag left in {:?}", out);
            prop_assert!(!INLINE_CODE.is_match(&out), "code left in {:?}", out);
            prop_assert!(!FENCED_CODE.is_match(&out), "fence left in {:?}", out);
            prop_assert_eq!(out.trim(), out.as_str());
            prop_assert!(!out.contains("  "));
        }

        #[test]
        fn tokens_ignore_surrounding_whitespace(s in "([a-z0-9-][a-z0-9 -]{0,59})?", lead in " {0,3}", trail in "[ \t\n]{0,5}") {
            // four spaces or a tab at the start would open an indented code block
            let a = tokenize_for_bag(&clean(&s));
            let b = tokenize_for_bag(&clean(&format!("{lead}{s}{trail}")));
            prop_assert_eq!(a, b);
        }
    }
}
