//! Constrained segmentation of transcript utterances onto reference units.
//!
//! Given `K` reference texts and `N` utterances, the aligner finds the
//! partition of the utterances into `K` contiguous nonempty chunks that
//! maximizes the summed chunk-to-reference similarity, in `O(K N^2)` scoring
//! calls.

mod dp;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AlignedTriple, Dialogue, Provenance, RuleSplitter, SentenceSplitter, Span};
use crate::similarity::{chunk_text, ChunkScorer, Scorer, SimilarityError, SimilarityProvider};

pub use dp::{
    brute_force, composition_count, evaluation_bound, evaluation_count, segment, Segmentation,
    SegmentationOutcome, SegmentationTable, BRUTE_FORCE_LIMIT,
};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("more segments than utterances ({k} > {n})")]
    TooManySegments { k: usize, n: usize },
    #[error("segmentation needs at least one reference and one utterance")]
    EmptyProblem,
    #[error("forced boundary {position} outside 1..{n}")]
    InvalidBoundary { position: usize, n: usize },
    #[error("no segmentation satisfies the forced boundaries")]
    Infeasible,
    #[error("instance too large for exhaustive search ({candidates} candidates)")]
    TooLarge { candidates: u64 },
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// `K` reference units, `N` utterances and the similarity between them.
pub struct SegmentationProblem<'a> {
    pub references: &'a [String],
    pub utterances: &'a [String],
    pub scorer: &'a dyn Scorer,
}

impl<'a> SegmentationProblem<'a> {
    pub fn new(references: &'a [String], utterances: &'a [String], scorer: &'a dyn Scorer) -> Self {
        SegmentationProblem {
            references,
            utterances,
            scorer,
        }
    }

    pub fn k(&self) -> usize {
        self.references.len()
    }

    pub fn n(&self) -> usize {
        self.utterances.len()
    }

    /// Every text the DP will score, for provider-side batching.
    fn all_texts(&self) -> Vec<String> {
        let n = self.n();
        let mut texts: Vec<String> = self.references.to_vec();
        for s in 0..n {
            for e in s + 1..=n {
                texts.push(chunk_text(self.utterances, Span::new(s, e)));
            }
        }
        texts
    }
}

pub fn constrained_segmentation(
    problem: &SegmentationProblem<'_>,
) -> Result<SegmentationOutcome, AlignError> {
    constrained_segmentation_with(problem, &[])
}

/// Like [`constrained_segmentation`], with chunk starts forced at the given
/// zero-based utterance positions.
pub fn constrained_segmentation_with(
    problem: &SegmentationProblem<'_>,
    forced: &[usize],
) -> Result<SegmentationOutcome, AlignError> {
    let (k, n) = (problem.k(), problem.n());
    if k > n {
        return Err(AlignError::TooManySegments { k, n });
    }
    if k > 0 && n > 0 {
        problem.scorer.prepare(&problem.all_texts())?;
    }
    let mut chunks = ChunkScorer::new(problem.references, problem.utterances, problem.scorer);
    segment(k, n, forced, |r, span| chunks.score(r, span))
}

pub fn brute_force_segmentation(
    problem: &SegmentationProblem<'_>,
) -> Result<Segmentation, AlignError> {
    let mut chunks = ChunkScorer::new(problem.references, problem.utterances, problem.scorer);
    brute_force(problem.k(), problem.n(), |r, span| chunks.score(r, span)).map(|(s, _)| s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignLevel {
    SuperSentence,
    Sentence,
}

impl std::str::FromStr for AlignLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "super" | "super_sentence" => Ok(AlignLevel::SuperSentence),
            "sentence" => Ok(AlignLevel::Sentence),
            other => Err(format!("unknown alignment level {other:?}")),
        }
    }
}

/// Why a dialogue produced no triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignFlag {
    Unalignable,
    UnitCountMismatch,
    SentenceCountMismatch,
    EmptyTranscript,
}

impl AlignFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlignFlag::Unalignable => "unalignable",
            AlignFlag::UnitCountMismatch => "unit_count_mismatch",
            AlignFlag::SentenceCountMismatch => "sentence_count_mismatch",
            AlignFlag::EmptyTranscript => "empty_transcript",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueAlignment {
    pub dialogue_id: String,
    pub triples: Vec<AlignedTriple>,
    pub flag: Option<AlignFlag>,
}

impl DialogueAlignment {
    fn flagged(id: &str, flag: AlignFlag) -> Self {
        log::info!("dialogue {id} skipped: {}", flag.as_str());
        DialogueAlignment {
            dialogue_id: id.to_string(),
            triples: Vec::new(),
            flag: Some(flag),
        }
    }
}

/// Context the per-dialogue scorer is fitted on.
pub(crate) fn scoring_context(dialogue: &Dialogue) -> Vec<&str> {
    dialogue
        .translation_units
        .iter()
        .chain(&dialogue.transcript_utterances)
        .map(String::as_str)
        .collect()
}

pub fn align_dialogue(
    dialogue: &Dialogue,
    level: AlignLevel,
    provider: &SimilarityProvider,
) -> Result<DialogueAlignment, AlignError> {
    align_dialogue_with(dialogue, level, provider, &RuleSplitter::default())
}

pub fn align_dialogue_with(
    dialogue: &Dialogue,
    level: AlignLevel,
    provider: &SimilarityProvider,
    splitter: &dyn SentenceSplitter,
) -> Result<DialogueAlignment, AlignError> {
    let id = dialogue.id.as_str();
    let utterances = &dialogue.transcript_utterances;
    if utterances.is_empty() {
        return Ok(DialogueAlignment::flagged(id, AlignFlag::EmptyTranscript));
    }
    if dialogue.source_units.len() != dialogue.translation_units.len()
        || dialogue.translation_units.is_empty()
    {
        return Ok(DialogueAlignment::flagged(id, AlignFlag::UnitCountMismatch));
    }
    if dialogue.translation_units.len() > utterances.len() {
        return Ok(DialogueAlignment::flagged(id, AlignFlag::Unalignable));
    }

    let scorer = provider.scorer(&scoring_context(dialogue));
    let problem =
        SegmentationProblem::new(&dialogue.translation_units, utterances, scorer.as_ref());
    let outcome = constrained_segmentation(&problem)?;
    let top = outcome.segmentation;

    let units: Vec<(String, String, Span, f64)> = match level {
        AlignLevel::SuperSentence => dialogue
            .source_units
            .iter()
            .zip(&dialogue.translation_units)
            .zip(top.spans.iter().zip(&top.per_span_scores))
            .map(|((s, t), (span, score))| (s.clone(), t.clone(), *span, *score))
            .collect(),
        AlignLevel::Sentence => {
            let mut out = Vec::new();
            for (u, chunk) in top.spans.iter().enumerate() {
                let src = splitter.split(&dialogue.source_units[u]);
                let tgt = splitter.split(&dialogue.translation_units[u]);
                if src.len() != tgt.len() {
                    return Ok(DialogueAlignment::flagged(
                        id,
                        AlignFlag::SentenceCountMismatch,
                    ));
                }
                if tgt.len() > chunk.len() {
                    return Ok(DialogueAlignment::flagged(id, AlignFlag::Unalignable));
                }
                let local = &utterances[chunk.range()];
                let inner = SegmentationProblem::new(&tgt, local, scorer.as_ref());
                let seg = constrained_segmentation(&inner)?.segmentation;
                for (((s, t), span), score) in src
                    .into_iter()
                    .zip(tgt)
                    .zip(seg.spans)
                    .zip(seg.per_span_scores)
                {
                    let global = Span::new(chunk.start + span.start, chunk.start + span.end);
                    out.push((s, t, global, score));
                }
            }
            out
        }
    };

    let triples = units
        .into_iter()
        .enumerate()
        .map(
            |(index, (source, translation, span, score))| AlignedTriple {
                dialogue_id: dialogue.id.clone(),
                index,
                source,
                translation,
                interpretation: chunk_text(utterances, span),
                span,
                score,
                provenance: Provenance::Auto,
                corrected: false,
            },
        )
        .collect();
    Ok(DialogueAlignment {
        dialogue_id: dialogue.id.clone(),
        triples,
        flag: None,
    })
}

/// Aligns dialogues in parallel; results keep input order.
pub fn align_corpus(
    dialogues: &[Dialogue],
    level: AlignLevel,
    provider: &SimilarityProvider,
) -> Result<Vec<DialogueAlignment>, AlignError> {
    dialogues
        .par_iter()
        .map(|d| align_dialogue(d, level, provider))
        .collect()
}

/// Splits triples into those scoring at least `min_score` and the rest.
pub fn split_by_score(
    triples: Vec<AlignedTriple>,
    min_score: f64,
) -> (Vec<AlignedTriple>, Vec<AlignedTriple>) {
    triples.into_iter().partition(|t| t.score >= min_score)
}
