use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aligner::{scoring_context, DialogueAlignment};
use crate::corpus::{spans_form_chain, AlignedTriple, Dialogue, Span};
use crate::similarity::{chunk_similarity, chunk_text, SimilarityProvider};

const INITIAL_FILE: &str = "initial.json";
const LOG_FILE: &str = "annotations.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown dialogue {0}")]
    UnknownDialogue(String),
    #[error("dialogue {dialogue} has no triple {index}")]
    UnknownTriple { dialogue: String, index: usize },
    #[error("invalid annotation: {0}")]
    Invalid(String),
    #[error("version conflict: dialogue is at version {latest}")]
    Conflict { latest: u64 },
    #[error("store io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("store data error: {0}")]
    Data(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Accept,
    AdjustSpan,
    EditText,
    Reject,
}

/// One reviewer decision about one triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    /// Client-chosen id; a record whose id was already applied is ignored.
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub dialogue_id: String,
    pub index: usize,
    pub action: Action,
    #[serde(default)]
    pub new_span: Option<Span>,
    #[serde(default)]
    pub new_text: Option<String>,
    pub annotator: String,
    /// Seconds since the Unix epoch; filled in by the store when absent.
    #[serde(default)]
    pub timestamp: Option<u64>,
    /// Version the annotator saw; a stale value is a conflict.
    #[serde(default)]
    pub base_version: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    Unreviewed,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleState {
    pub triple: AlignedTriple,
    /// Interpretation text before any manual correction.
    pub asr_interpretation: String,
    pub status: ReviewStatus,
    pub annotators: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub dialogue: Dialogue,
    pub triples: Vec<TripleState>,
    pub version: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DialogueStatus {
    Unreviewed,
    InProgress,
    Reviewed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueSummary {
    pub id: String,
    pub units: usize,
    pub utterances: usize,
    pub status: DialogueStatus,
    pub version: u64,
}

impl DialogueRecord {
    fn new(dialogue: Dialogue, triples: Vec<AlignedTriple>) -> Self {
        let triples = triples
            .into_iter()
            .map(|t| TripleState {
                asr_interpretation: t.interpretation.clone(),
                triple: t,
                status: ReviewStatus::Unreviewed,
                annotators: BTreeSet::new(),
            })
            .collect();
        DialogueRecord {
            dialogue,
            triples,
            version: 0,
        }
    }

    pub fn spans(&self) -> Vec<Span> {
        self.triples.iter().map(|t| t.triple.span).collect()
    }

    pub fn status(&self) -> DialogueStatus {
        let reviewed = self
            .triples
            .iter()
            .filter(|t| t.status != ReviewStatus::Unreviewed)
            .count();
        match reviewed {
            0 if self.version == 0 => DialogueStatus::Unreviewed,
            n if n == self.triples.len() => DialogueStatus::Reviewed,
            _ => DialogueStatus::InProgress,
        }
    }

    pub fn summary(&self) -> DialogueSummary {
        DialogueSummary {
            id: self.dialogue.id.clone(),
            units: self.triples.len(),
            utterances: self.dialogue.transcript_utterances.len(),
            status: self.status(),
            version: self.version,
        }
    }

    fn check_partition(&self, spans: &[Span]) -> Result<(), StoreError> {
        let n = self.dialogue.transcript_utterances.len();
        if !spans_form_chain(spans, n) {
            return Err(StoreError::Invalid(
                "spans must be nonempty, ordered and contiguous".into(),
            ));
        }
        let covers = spans.first().map_or(true, |s| s.start == 0)
            && spans.last().map_or(true, |s| s.end == n);
        if !covers {
            return Err(StoreError::Invalid(format!(
                "spans must cover utterances 0..{n}"
            )));
        }
        Ok(())
    }

    /// Applies `record` to a copy and returns it; `self` is untouched on
    /// error.
    fn applied(&self, record: &AnnotationRecord) -> Result<DialogueRecord, StoreError> {
        let i = record.index;
        if i >= self.triples.len() {
            return Err(StoreError::UnknownTriple {
                dialogue: self.dialogue.id.clone(),
                index: i,
            });
        }
        if record.annotator.trim().is_empty() {
            return Err(StoreError::Invalid("annotator is required".into()));
        }
        let mut next = self.clone();
        match record.action {
            Action::Accept => next.triples[i].status = ReviewStatus::Accepted,
            Action::Reject => next.triples[i].status = ReviewStatus::Rejected,
            Action::EditText => {
                let text = record
                    .new_text
                    .as_deref()
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .ok_or_else(|| StoreError::Invalid("edit_text requires new_text".into()))?;
                let t = &mut next.triples[i];
                t.triple.interpretation = text.to_string();
                t.triple.corrected = t.triple.interpretation != t.asr_interpretation;
                t.status = ReviewStatus::Accepted;
            }
            Action::AdjustSpan => {
                let span = record
                    .new_span
                    .ok_or_else(|| StoreError::Invalid("adjust_span requires new_span".into()))?;
                next.adjust(i, span)?;
            }
        }
        next.triples[i].annotators.insert(record.annotator.clone());
        next.version += 1;
        Ok(next)
    }

    fn adjust(&mut self, i: usize, span: Span) -> Result<(), StoreError> {
        let mut spans = self.spans();
        spans[i] = span;
        if i > 0 {
            spans[i - 1].end = span.start;
        }
        if i + 1 < spans.len() {
            spans[i + 1].start = span.end;
        }
        self.check_partition(&spans)?;
        let changed: Vec<usize> = (0..spans.len())
            .filter(|&j| spans[j] != self.triples[j].triple.span)
            .collect();
        if changed.iter().any(|&j| self.triples[j].triple.corrected) {
            return Err(StoreError::Invalid(
                "spans of a text-corrected triple cannot change".into(),
            ));
        }
        let utterances = &self.dialogue.transcript_utterances;
        let provider = SimilarityProvider::LexicalTfIdf;
        let scorer = provider.scorer(&scoring_context(&self.dialogue));
        for j in changed {
            let t = &mut self.triples[j];
            let text = chunk_text(utterances, spans[j]);
            t.triple.score =
                chunk_similarity(&t.triple.translation, utterances, spans[j], scorer.as_ref())
                    .map_err(|e| StoreError::Invalid(e.to_string()))?;
            t.triple.span = spans[j];
            t.triple.interpretation = text.clone();
            t.asr_interpretation = text;
        }
        self.triples[i].status = ReviewStatus::Accepted;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    dialogues: Vec<DialogueRecord>,
}

/// Dialogues under review. Single writer; persisted as an initial snapshot
/// plus an append-only annotation log when opened on a directory.
#[derive(Debug)]
pub struct ReviewStore {
    dir: Option<PathBuf>,
    dialogues: BTreeMap<String, DialogueRecord>,
    log: Vec<AnnotationRecord>,
    seen: HashSet<String>,
}

impl ReviewStore {
    /// In-memory store over the aligned dialogues; flagged or unknown
    /// alignments are skipped.
    pub fn from_alignments(dialogues: &[Dialogue], alignments: &[DialogueAlignment]) -> Self {
        let by_id: BTreeMap<&str, &Dialogue> =
            dialogues.iter().map(|d| (d.id.as_str(), d)).collect();
        let records = alignments
            .iter()
            .filter(|a| a.flag.is_none() && !a.triples.is_empty())
            .filter_map(|a| {
                let d = by_id.get(a.dialogue_id.as_str())?;
                Some((
                    a.dialogue_id.clone(),
                    DialogueRecord::new((*d).clone(), a.triples.clone()),
                ))
            })
            .collect();
        ReviewStore {
            dir: None,
            dialogues: records,
            log: Vec::new(),
            seen: HashSet::new(),
        }
    }

    /// Writes the initial snapshot into `dir` and persists every later
    /// annotation there.
    pub fn persist_to(mut self, dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        if !self.log.is_empty() {
            return Err(StoreError::Data("store already has annotations".into()));
        }
        let snapshot = Snapshot {
            dialogues: self.dialogues.values().cloned().collect(),
        };
        let json = serde_json::to_string(&snapshot).map_err(|e| StoreError::Data(e.to_string()))?;
        fs::write(dir.join(INITIAL_FILE), json)?;
        File::create(dir.join(LOG_FILE))?;
        self.dir = Some(dir);
        Ok(self)
    }

    /// Reopens a persisted store by replaying its log.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        let text = fs::read_to_string(dir.join(INITIAL_FILE))?;
        let snapshot: Snapshot =
            serde_json::from_str(&text).map_err(|e| StoreError::Data(e.to_string()))?;
        let mut store = ReviewStore {
            dir: None,
            dialogues: snapshot
                .dialogues
                .into_iter()
                .map(|d| (d.dialogue.id.clone(), d))
                .collect(),
            log: Vec::new(),
            seen: HashSet::new(),
        };
        let log_path = dir.join(LOG_FILE);
        if log_path.exists() {
            for (n, line) in BufReader::new(File::open(&log_path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: AnnotationRecord = serde_json::from_str(&line)
                    .map_err(|e| StoreError::Data(format!("{LOG_FILE} line {}: {e}", n + 1)))?;
                store.apply(record)?;
            }
        }
        store.dir = Some(dir);
        Ok(store)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }

    pub fn dialogue(&self, id: &str) -> Option<&DialogueRecord> {
        self.dialogues.get(id)
    }

    pub fn dialogues(&self) -> impl Iterator<Item = &DialogueRecord> {
        self.dialogues.values()
    }

    pub fn log(&self) -> &[AnnotationRecord] {
        &self.log
    }

    /// Applies one annotation and returns the dialogue's new state.
    pub fn apply(&mut self, mut record: AnnotationRecord) -> Result<&DialogueRecord, StoreError> {
        if !self.dialogues.contains_key(&record.dialogue_id) {
            return Err(StoreError::UnknownDialogue(record.dialogue_id.clone()));
        }
        if record.id.as_ref().is_some_and(|id| self.seen.contains(id)) {
            return Ok(&self.dialogues[&record.dialogue_id]);
        }
        let current = &self.dialogues[&record.dialogue_id];
        if let Some(base) = record.base_version {
            if base != current.version {
                return Err(StoreError::Conflict {
                    latest: current.version,
                });
            }
        }
        let next = current.applied(&record)?;
        if record.id.is_none() {
            record.id = Some(format!("{}@{}", record.dialogue_id, next.version));
        }
        if record.timestamp.is_none() {
            record.timestamp = Some(
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
            );
        }
        if let Some(dir) = &self.dir {
            let line =
                serde_json::to_string(&record).map_err(|e| StoreError::Data(e.to_string()))?;
            let mut log = OpenOptions::new()
                .append(true)
                .create(true)
                .open(dir.join(LOG_FILE))?;
            writeln!(log, "{line}")?;
            log.sync_data()?;
        }
        self.seen
            .insert(record.id.clone().expect("id assigned above"));
        self.log.push(record);
        let id = next.dialogue.id.clone();
        self.dialogues.insert(id.clone(), next);
        Ok(&self.dialogues[&id])
    }
}
