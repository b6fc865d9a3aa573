//! The similarity `d` maximized by the segmentation DP.
//!
//! Providers return similarities in `[0, 1]`, never distances.

mod embedding;
mod lexical;

use std::collections::HashMap;

use thiserror::Error;

use crate::cache::CacheError;
use crate::corpus::Span;

pub use embedding::{
    EmbedRequest, EmbedResponse, EmbeddingClient, EmbeddingScorer, EmbeddingTransport,
    EmbeddingVector, HttpEmbeddingTransport, RetryPolicy, ENDPOINT_VAR, TOKEN_VAR,
};
pub use lexical::{lexical_similarity, TfIdfScorer};

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("embedding provider unavailable after {attempts} attempts: {reason}")]
    ProviderUnavailable { attempts: usize, reason: String },
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("provider returned {found} vectors for {expected} texts")]
    CountMismatch { expected: usize, found: usize },
    #[error("invalid embedding: {0}")]
    InvalidVector(String),
    #[error("chunk {span} out of range for {n} utterances")]
    IndexOutOfRange { span: Span, n: usize },
    #[error("reference {index} out of range for {k} references")]
    ReferenceOutOfRange { index: usize, k: usize },
    #[error("provider configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// A similarity function over two texts.
pub trait Scorer: Send + Sync {
    fn score(&self, a: &str, b: &str) -> Result<f64, SimilarityError>;

    /// Hint that `texts` are about to be scored, so remote providers can
    /// batch them.
    fn prepare(&self, _texts: &[String]) -> Result<(), SimilarityError> {
        Ok(())
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        (**self).score(a, b)
    }

    fn prepare(&self, texts: &[String]) -> Result<(), SimilarityError> {
        (**self).prepare(texts)
    }
}

/// Which similarity backs the aligner.
pub enum SimilarityProvider {
    /// TF-IDF cosine with IDF fitted per dialogue.
    LexicalTfIdf,
    ExternalEmbedding(EmbeddingClient),
}

impl SimilarityProvider {
    pub fn id(&self) -> &str {
        match self {
            SimilarityProvider::LexicalTfIdf => "lexical_tfidf",
            SimilarityProvider::ExternalEmbedding(client) => client.provider_id(),
        }
    }

    /// A scorer for one dialogue; `context` is the dialogue's text units.
    pub fn scorer<'a>(&'a self, context: &[&str]) -> Box<dyn Scorer + 'a> {
        match self {
            SimilarityProvider::LexicalTfIdf => Box::new(TfIdfScorer::fit(context)),
            SimilarityProvider::ExternalEmbedding(client) => Box::new(EmbeddingScorer::new(client)),
        }
    }
}

/// Text of the chunk `span` of `utterances`, joined with single spaces.
pub fn chunk_text(utterances: &[String], span: Span) -> String {
    utterances[span.range()].join(" ")
}

/// Similarity between `x` and the concatenation of the utterances in `span`
/// (half-open, zero-based).
pub fn chunk_similarity(
    x: &str,
    utterances: &[String],
    span: Span,
    scorer: &dyn Scorer,
) -> Result<f64, SimilarityError> {
    if span.is_empty() || span.end > utterances.len() {
        return Err(SimilarityError::IndexOutOfRange {
            span,
            n: utterances.len(),
        });
    }
    scorer.score(x, &chunk_text(utterances, span))
}

/// Memoized `d(X_k, Y[span])` over a fixed reference and utterance list.
pub struct ChunkScorer<'a> {
    references: &'a [String],
    utterances: &'a [String],
    scorer: &'a dyn Scorer,
    memo: HashMap<(usize, Span), f64>,
    evaluations: usize,
}

impl<'a> ChunkScorer<'a> {
    pub fn new(references: &'a [String], utterances: &'a [String], scorer: &'a dyn Scorer) -> Self {
        ChunkScorer {
            references,
            utterances,
            scorer,
            memo: HashMap::new(),
            evaluations: 0,
        }
    }

    pub fn score(&mut self, reference: usize, span: Span) -> Result<f64, SimilarityError> {
        if let Some(v) = self.memo.get(&(reference, span)) {
            return Ok(*v);
        }
        let x = self
            .references
            .get(reference)
            .ok_or(SimilarityError::ReferenceOutOfRange {
                index: reference,
                k: self.references.len(),
            })?;
        let value = chunk_similarity(x, self.utterances, span, self.scorer)?;
        self.evaluations += 1;
        self.memo.insert((reference, span), value);
        Ok(value)
    }

    /// Number of distinct provider evaluations performed.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }
}
