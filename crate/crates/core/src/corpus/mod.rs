//! Record types shared by every pipeline stage, plus tokenization, sentence
//! splitting and the line-delimited JSON formats.

mod io;
mod sentences;
mod tokenize;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use io::{
    read_corpus, read_corpus_from, read_triples, read_triples_from, write_corpus, write_corpus_to,
    write_triples, write_triples_to, CorpusError, ReadMode,
};
pub use sentences::{RuleSplitter, SentenceSplitter, DEFAULT_ABBREVIATIONS};
pub use tokenize::{is_word, normalize, tokenize, word_count, Casing, TokenSeq};

/// One debate turn: the source speech, its offline translation and the ASR
/// transcript of the live interpretation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    /// Source-language super-sentences.
    pub source_units: Vec<String>,
    /// Offline translation super-sentences, parallel to `source_units`.
    pub translation_units: Vec<String>,
    /// Transcribed interpretation, one utterance per entry.
    pub transcript_utterances: Vec<String>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl Dialogue {
    pub fn new(id: impl Into<String>) -> Self {
        Dialogue {
            id: id.into(),
            source_units: Vec::new(),
            translation_units: Vec::new(),
            transcript_utterances: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    /// Iterates every text field of the dialogue.
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.source_units
            .iter()
            .chain(&self.translation_units)
            .chain(&self.transcript_utterances)
            .map(String::as_str)
    }
}

/// Half-open range of utterance indices `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span { start, end }
    }
}

impl From<Span> for (usize, usize) {
    fn from(span: Span) -> Self {
        (span.start, span.end)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Auto,
    Annotated,
}

/// A `<source, translation, interpretation>` unit cut out of a dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedTriple {
    pub dialogue_id: String,
    pub index: usize,
    pub source: String,
    pub translation: String,
    pub interpretation: String,
    pub span: Span,
    /// Similarity of the interpretation chunk to the translation.
    pub score: f64,
    pub provenance: Provenance,
    pub corrected: bool,
}

impl AlignedTriple {
    /// Stable identifier used in filter reports and the review API.
    pub fn key(&self) -> String {
        format!("{}#{}", self.dialogue_id, self.index)
    }
}

/// Checks that spans are nonempty, ordered and adjacent (each span starts
/// where the previous one ended) and stay within `n_utterances`.
pub fn spans_form_chain(spans: &[Span], n_utterances: usize) -> bool {
    spans.iter().all(|s| !s.is_empty() && s.end <= n_utterances)
        && spans.windows(2).all(|w| w[0].end == w[1].start)
}
