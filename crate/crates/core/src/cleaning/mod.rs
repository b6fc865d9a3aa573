//! Heuristic filters for raw dialogues and aligned triples.
//!
//! Rules run in list order and a record is attributed to the first rule that
//! removes it, so every [`FilterReport`] partitions its input exactly.

mod language;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{tokenize, word_count, AlignedTriple, Dialogue};

pub use language::{detect_language, Detection, LanguageDetector, ENGLISH_WORDS, GERMAN_WORDS};

/// Session-management phrases marking transitions between debate items.
pub const DEFAULT_SIGNALS: &[&str] = &[
    "the vote will take place",
    "the debate is closed",
    "the sitting is closed",
    "the sitting was suspended",
    "the next item is",
    "die abstimmung findet",
    "die aussprache ist geschlossen",
    "die sitzung ist geschlossen",
    "die sitzung wird unterbrochen",
    "nach der tagesordnung folgt",
];

pub const DEFAULT_SIGNAL_THRESHOLD: usize = 150;
pub const DEFAULT_LENGTH_RATIO: (f64, f64) = (0.5, 2.0);

#[derive(Debug, Error)]
pub enum CleaningError {
    #[error("unknown rule kind {0:?}")]
    UnknownRuleKind(String),
    #[error("rule {rule}: {reason}")]
    InvalidParams { rule: String, reason: String },
    #[error("rule {rule} ({kind}) does not apply to {target}")]
    NotApplicable {
        rule: String,
        kind: RuleKind,
        target: &'static str,
    },
    #[error("rule list is empty")]
    NoRules,
    #[error("length ratio bounds must satisfy 0 < low < 1 < high, got [{low}, {high}]")]
    InvalidBounds { low: f64, high: f64 },
    #[error("cannot read rule file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse rule file: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    MinTokens,
    SignalPhrase,
    SentenceCountMismatch,
    NonSourceLanguage,
    MinInterpretationTokens,
    LengthRatio,
}

impl RuleKind {
    pub const ALL: [RuleKind; 6] = [
        RuleKind::MinTokens,
        RuleKind::SignalPhrase,
        RuleKind::SentenceCountMismatch,
        RuleKind::NonSourceLanguage,
        RuleKind::MinInterpretationTokens,
        RuleKind::LengthRatio,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RuleKind::MinTokens => "min_tokens",
            RuleKind::SignalPhrase => "signal_phrase",
            RuleKind::SentenceCountMismatch => "sentence_count_mismatch",
            RuleKind::NonSourceLanguage => "non_source_language",
            RuleKind::MinInterpretationTokens => "min_interpretation_tokens",
            RuleKind::LengthRatio => "length_ratio",
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RuleKind {
    type Err = CleaningError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| CleaningError::UnknownRuleKind(s.to_string()))
    }
}

/// One entry of a rule configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRule {
    pub name: String,
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
}

impl FilterRule {
    pub fn new(kind: RuleKind) -> Self {
        FilterRule {
            name: kind.as_str().to_string(),
            kind: kind.as_str().to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn min_tokens(threshold: usize) -> Self {
        FilterRule::new(RuleKind::MinTokens).with_param("threshold", threshold)
    }

    pub fn signal_phrase() -> Self {
        FilterRule::new(RuleKind::SignalPhrase)
    }

    pub fn sentence_count_mismatch() -> Self {
        FilterRule::new(RuleKind::SentenceCountMismatch)
    }

    pub fn non_source_language(language: &str) -> Self {
        FilterRule::new(RuleKind::NonSourceLanguage).with_param("language", language)
    }

    pub fn min_interpretation_tokens(threshold: usize) -> Self {
        FilterRule::new(RuleKind::MinInterpretationTokens).with_param("threshold", threshold)
    }

    pub fn length_ratio(low: f64, high: f64) -> Self {
        FilterRule::new(RuleKind::LengthRatio)
            .with_param("low", low)
            .with_param("high", high)
    }
}

/// The default dialogue rule list: language, length, signal phrases and
/// sentence-count agreement.
pub fn default_dialogue_rules() -> Vec<FilterRule> {
    vec![
        FilterRule::non_source_language("de"),
        FilterRule::min_tokens(20),
        FilterRule::signal_phrase(),
        FilterRule::sentence_count_mismatch(),
    ]
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<Vec<FilterRule>, CleaningError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone)]
struct Signal {
    phrase: String,
    threshold: usize,
}

#[derive(Debug, Clone)]
enum Check {
    MinTokens(usize),
    Signals(Vec<Signal>),
    SentenceCountMismatch,
    Language { tag: String, min_confidence: f64 },
    MinInterpretationWords(usize),
    LengthRatio { low: f64, high: f64 },
}

#[derive(Debug, Clone)]
struct CompiledRule {
    name: String,
    kind: RuleKind,
    check: Check,
}

fn invalid(rule: &FilterRule, reason: impl Into<String>) -> CleaningError {
    CleaningError::InvalidParams {
        rule: rule.name.clone(),
        reason: reason.into(),
    }
}

fn threshold_param(
    rule: &FilterRule,
    key: &str,
    default: Option<usize>,
) -> Result<usize, CleaningError> {
    match rule.params.get(key) {
        Some(v) => match v.as_u64() {
            Some(n) if n >= 1 => Ok(n as usize),
            _ => Err(invalid(rule, format!("{key} must be an integer >= 1"))),
        },
        None => default.ok_or_else(|| invalid(rule, format!("missing parameter {key}"))),
    }
}

fn float_param(rule: &FilterRule, key: &str, default: f64) -> Result<f64, CleaningError> {
    match rule.params.get(key) {
        Some(v) => v
            .as_f64()
            .ok_or_else(|| invalid(rule, format!("{key} must be a number"))),
        None => Ok(default),
    }
}

fn compile_signals(rule: &FilterRule) -> Result<Vec<Signal>, CleaningError> {
    let default_threshold = threshold_param(rule, "threshold", Some(DEFAULT_SIGNAL_THRESHOLD))?;
    let Some(list) = rule.params.get("signals") else {
        return Ok(DEFAULT_SIGNALS
            .iter()
            .map(|p| Signal {
                phrase: p.to_string(),
                threshold: default_threshold,
            })
            .collect());
    };
    let entries = list
        .as_array()
        .ok_or_else(|| invalid(rule, "signals must be an array"))?;
    entries
        .iter()
        .map(|entry| match entry {
            Value::String(phrase) => Ok(Signal {
                phrase: phrase.to_lowercase(),
                threshold: default_threshold,
            }),
            Value::Object(map) => {
                let phrase = map
                    .get("phrase")
                    .and_then(Value::as_str)
                    .ok_or_else(|| invalid(rule, "signal object needs a phrase"))?;
                let threshold = match map.get("threshold") {
                    None => default_threshold,
                    Some(v) => match v.as_u64() {
                        Some(n) if n >= 1 => n as usize,
                        _ => return Err(invalid(rule, "signal threshold must be >= 1")),
                    },
                };
                Ok(Signal {
                    phrase: phrase.to_lowercase(),
                    threshold,
                })
            }
            _ => Err(invalid(rule, "signals entries must be strings or objects")),
        })
        .collect()
}

fn compile(rule: &FilterRule) -> Result<CompiledRule, CleaningError> {
    let kind: RuleKind = rule.kind.parse()?;
    let check = match kind {
        RuleKind::MinTokens => Check::MinTokens(threshold_param(rule, "threshold", None)?),
        RuleKind::SignalPhrase => Check::Signals(compile_signals(rule)?),
        RuleKind::SentenceCountMismatch => Check::SentenceCountMismatch,
        RuleKind::NonSourceLanguage => Check::Language {
            tag: rule
                .params
                .get("language")
                .map(|v| v.as_str().map(str::to_string))
                .unwrap_or(Some("de".to_string()))
                .ok_or_else(|| invalid(rule, "language must be a string"))?,
            min_confidence: float_param(rule, "min_confidence", 0.0)?,
        },
        RuleKind::MinInterpretationTokens => {
            Check::MinInterpretationWords(threshold_param(rule, "threshold", Some(4))?)
        }
        RuleKind::LengthRatio => {
            let low = float_param(rule, "low", DEFAULT_LENGTH_RATIO.0)?;
            let high = float_param(rule, "high", DEFAULT_LENGTH_RATIO.1)?;
            check_bounds(low, high)?;
            Check::LengthRatio { low, high }
        }
    };
    Ok(CompiledRule {
        name: rule.name.clone(),
        kind,
        check,
    })
}

fn check_bounds(low: f64, high: f64) -> Result<(), CleaningError> {
    if low > 0.0 && low < 1.0 && high > 1.0 && high.is_finite() {
        Ok(())
    } else {
        Err(CleaningError::InvalidBounds { low, high })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub id: String,
    pub rule: String,
}

/// Audit trail of one filtering pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept: Vec<String>,
    pub removed: Vec<Removal>,
    /// Removal count per rule name, zero entries included.
    pub counts: BTreeMap<String, usize>,
}

impl FilterReport {
    fn with_rules<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        FilterReport {
            counts: names.into_iter().map(|n| (n.to_string(), 0)).collect(),
            ..FilterReport::default()
        }
    }

    fn record(&mut self, id: String, verdict: Option<String>) {
        match verdict {
            None => self.kept.push(id),
            Some(rule) => {
                *self.counts.entry(rule.clone()).or_insert(0) += 1;
                self.removed.push(Removal { id, rule });
            }
        }
    }

    pub fn total(&self) -> usize {
        self.kept.len() + self.removed.len()
    }
}

impl fmt::Display for FilterReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .counts
            .keys()
            .map(String::len)
            .chain(["kept".len(), "removed".len()])
            .max()
            .unwrap_or(0);
        writeln!(f, "{:<width$}  {:>8}", "rule", "removed")?;
        for (rule, count) in &self.counts {
            writeln!(f, "{rule:<width$}  {count:>8}")?;
        }
        writeln!(f, "{:<width$}  {:>8}", "removed", self.removed.len())?;
        write!(f, "{:<width$}  {:>8}", "kept", self.kept.len())
    }
}

/// Records surviving a filter together with its report.
#[derive(Debug, Clone)]
pub struct Filtered<T> {
    pub kept: Vec<T>,
    pub report: FilterReport,
}

fn source_tokens(dialogue: &Dialogue) -> usize {
    dialogue
        .source_units
        .iter()
        .map(|u| tokenize(u, false).len())
        .sum()
}

fn source_words(dialogue: &Dialogue) -> usize {
    dialogue.source_units.iter().map(|u| word_count(u)).sum()
}

fn contains_phrase(haystack: &str, phrase: &str) -> bool {
    let phrase = tokenize(phrase, true).joined();
    // token boundaries on both sides
    format!(" {haystack} ").contains(&format!(" {phrase} "))
}

impl CompiledRule {
    fn removes_dialogue(&self, dialogue: &Dialogue, detector: &LanguageDetector) -> bool {
        match &self.check {
            Check::MinTokens(threshold) => source_tokens(dialogue) < *threshold,
            Check::Signals(signals) => {
                let text = dialogue
                    .texts()
                    .map(|t| tokenize(t, true).joined())
                    .collect::<Vec<_>>()
                    .join(" ");
                let words = source_words(dialogue);
                signals
                    .iter()
                    .any(|s| words < s.threshold && contains_phrase(&text, &s.phrase))
            }
            Check::SentenceCountMismatch => {
                dialogue.source_units.len() != dialogue.translation_units.len()
            }
            Check::Language {
                tag,
                min_confidence,
            } => {
                let detection = detector.detect(&dialogue.source_units.join(" "));
                detection.language != *tag || detection.confidence < *min_confidence
            }
            Check::MinInterpretationWords(threshold) => !dialogue
                .transcript_utterances
                .iter()
                .any(|u| word_count(u) >= *threshold),
            Check::LengthRatio { .. } => unreachable!("rejected at compile time"),
        }
    }

    fn triple_verdict(&self, triple: &AlignedTriple) -> Option<String> {
        match &self.check {
            Check::LengthRatio { low, high } => {
                length_ratio_verdict(triple, *low, *high).map(|reason| match reason {
                    "length_ratio" => self.name.clone(),
                    other => other.to_string(),
                })
            }
            Check::MinInterpretationWords(threshold) => {
                (word_count(&triple.interpretation) < *threshold).then(|| self.name.clone())
            }
            _ => unreachable!("rejected at compile time"),
        }
    }
}

fn compile_all(
    rules: &[FilterRule],
    target: &'static str,
    allowed: impl Fn(RuleKind) -> bool,
) -> Result<Vec<CompiledRule>, CleaningError> {
    if rules.is_empty() {
        return Err(CleaningError::NoRules);
    }
    rules
        .iter()
        .map(|rule| {
            let compiled = compile(rule)?;
            if allowed(compiled.kind) {
                Ok(compiled)
            } else {
                Err(CleaningError::NotApplicable {
                    rule: rule.name.clone(),
                    kind: compiled.kind,
                    target,
                })
            }
        })
        .collect()
}

/// Removes each dialogue matched by a rule, attributing it to the first
/// matching rule in list order.
pub fn filter_dialogues(
    corpus: &[Dialogue],
    rules: &[FilterRule],
) -> Result<Filtered<Dialogue>, CleaningError> {
    let compiled = compile_all(rules, "dialogues", |k| k != RuleKind::LengthRatio)?;
    let detector = LanguageDetector::default();
    let verdicts: Vec<Option<String>> = corpus
        .par_iter()
        .map(|d| {
            compiled
                .iter()
                .find(|r| r.removes_dialogue(d, &detector))
                .map(|r| r.name.clone())
        })
        .collect();

    let mut report = FilterReport::with_rules(compiled.iter().map(|r| r.name.as_str()));
    let mut kept = Vec::new();
    for (dialogue, verdict) in corpus.iter().zip(verdicts) {
        if verdict.is_none() {
            kept.push(dialogue.clone());
        }
        report.record(dialogue.id.clone(), verdict);
    }
    Ok(Filtered { kept, report })
}

pub const RAW_FILTER_RULE: &str = "min_interpretation_tokens";

/// Drops utterances with fewer than `min_words` words; dialogues left with
/// no utterance are removed.
pub fn filter_raw_interpretations(dialogues: &[Dialogue], min_words: usize) -> Filtered<Dialogue> {
    let mut report = FilterReport::with_rules([RAW_FILTER_RULE]);
    let mut kept = Vec::new();
    for dialogue in dialogues {
        let utterances: Vec<String> = dialogue
            .transcript_utterances
            .iter()
            .filter(|u| word_count(u) >= min_words)
            .cloned()
            .collect();
        if utterances.is_empty() {
            report.record(dialogue.id.clone(), Some(RAW_FILTER_RULE.to_string()));
        } else {
            report.record(dialogue.id.clone(), None);
            kept.push(Dialogue {
                transcript_utterances: utterances,
                ..dialogue.clone()
            });
        }
    }
    Filtered { kept, report }
}

fn length_ratio_verdict(triple: &AlignedTriple, low: f64, high: f64) -> Option<&'static str> {
    let reference = tokenize(&triple.translation, false).len();
    if reference == 0 {
        return Some("empty_reference");
    }
    let ratio = tokenize(&triple.interpretation, false).len() as f64 / reference as f64;
    (!(low..=high).contains(&ratio)).then_some("length_ratio")
}

/// Keeps a triple iff `low <= |interpretation| / |translation| <= high`
/// in tokens.
pub fn length_ratio_filter(
    triples: &[AlignedTriple],
    low: f64,
    high: f64,
) -> Result<Filtered<AlignedTriple>, CleaningError> {
    check_bounds(low, high)?;
    let mut report = FilterReport::with_rules(["length_ratio", "empty_reference"]);
    let mut kept = Vec::new();
    for triple in triples {
        let verdict = length_ratio_verdict(triple, low, high);
        if verdict.is_none() {
            kept.push(triple.clone());
        }
        report.record(triple.key(), verdict.map(str::to_string));
    }
    Ok(Filtered { kept, report })
}

/// Rule-list filtering for triples; accepts `length_ratio` and
/// `min_interpretation_tokens` rules.
pub fn filter_triples(
    triples: &[AlignedTriple],
    rules: &[FilterRule],
) -> Result<Filtered<AlignedTriple>, CleaningError> {
    let compiled = compile_all(rules, "triples", |k| {
        matches!(k, RuleKind::LengthRatio | RuleKind::MinInterpretationTokens)
    })?;
    let mut report = FilterReport::with_rules(compiled.iter().map(|r| r.name.as_str()));
    if compiled.iter().any(|r| r.kind == RuleKind::LengthRatio) {
        report
            .counts
            .entry("empty_reference".to_string())
            .or_insert(0);
    }
    let mut kept = Vec::new();
    for triple in triples {
        let verdict = compiled.iter().find_map(|r| r.triple_verdict(triple));
        if verdict.is_none() {
            kept.push(triple.clone());
        }
        report.record(triple.key(), verdict);
    }
    Ok(Filtered { kept, report })
}
