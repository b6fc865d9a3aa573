//! Translation-to-interpretation style transfer.
//!
//! A small phrase-based rewriter trained on `(translation-style,
//! interpretation-style)` sentence pairs: Model 1 word alignment in both
//! directions, symmetrized links, phrase extraction, a Witten-Bell n-gram
//! language model over the interpretation side and a beam decoder.

mod bundle;
mod decoder;
mod lm;
mod model1;
mod phrases;
mod provider;
mod symmetrize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::CacheError;

pub use bundle::{
    apply_t2i, apply_t2i_files, build_t2i_pairs, model_hash, train_t2i, ApplyManifest, ModelBundle,
    PairMode, T2iInputs, TrainConfig, DECODER_FILE, LM_FILE, MODEL_FILES, PHRASE_TABLE_FILE,
};
pub use decoder::{
    collect_options, decode, decode_scored, Decoded, DecoderConfig, Features, OovPolicy,
    TranslationOption, Weights,
};
pub use lm::{train_lm, LmSmoothing, NGramLM, BOS, EOS, UNK_LOG10};
pub use model1::{train_model1, viterbi_align, Model1, TranslationTable, NULL};
pub use phrases::{extract_phrases, PhraseEntry, PhraseSpans, PhraseTable};
pub use provider::{
    round_trip, HttpMtTransport, MtClient, MtRequest, MtResponse, MtTransport, RoundTrip,
    MT_ENDPOINT_VAR, MT_TOKEN_VAR,
};
pub use symmetrize::{symmetrize, Symmetrization};

/// A word alignment link `(source position, target position)`.
pub type Link = (usize, usize);

#[derive(Debug, Error)]
pub enum T2iError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("{0}")]
    Format(String),
    #[error("missing model component {0}")]
    MissingComponent(String),
    #[error("expected a {expected:?} corpus, got {found:?}")]
    WrongLabel {
        expected: CorpusLabel,
        found: CorpusLabel,
    },
    #[error("translation provider unavailable after {attempts} attempts: {reason}")]
    ProviderUnavailable { attempts: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// Which kind of text a corpus holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorpusLabel {
    /// ASR interpretations after light filtering.
    Raw,
    /// Aligned triples after length-ratio filtering.
    Clean,
    /// Interpretations round-tripped through machine translation.
    TranslationFB,
    /// Translations rewritten by the style-transfer model.
    PseudoI,
}

/// Lines tagged with the kind of text they hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeled<T> {
    pub label: CorpusLabel,
    pub items: Vec<T>,
}

impl<T> Labeled<T> {
    pub fn new(label: CorpusLabel, items: Vec<T>) -> Self {
        Labeled { label, items }
    }

    pub fn expect(&self, label: CorpusLabel) -> Result<&[T], T2iError> {
        if self.label != label {
            return Err(T2iError::WrongLabel {
                expected: label,
                found: self.label,
            });
        }
        Ok(&self.items)
    }
}
