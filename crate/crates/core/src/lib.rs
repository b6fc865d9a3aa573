//! Corpus engineering for simultaneous interpretation data.
//!
//! The crate covers the whole path from raw debate "dialogues" (source
//! speeches, offline translations and ASR transcripts of the live
//! interpretation) to evaluated simultaneous-translation output:
//!
//! * [`corpus`]: record types, tokenization, sentence splitting and JSONL I/O.
//! * [`cleaning`]: rule-driven dialogue and triple filters with audit reports.
//! * [`similarity`]: TF-IDF and embedding-service similarity providers.
//! * [`aligner`]: constrained-segmentation dynamic programming that maps
//!   transcript utterances onto translation units.
//! * [`metrics`]: corpus BLEU, average proportion and average lagging.
//! * [`waitk`]: wait-k read/write simulation over pluggable generators.
//! * [`t2i`]: a small phrase-based engine that rewrites offline translations
//!   into interpretation-style text.
//! * [`ngram_analysis`]: introduced-correct n-gram statistics.
//! * [`service`] and [`pipeline`]: annotation store, HTTP review API and the
//!   staged end-to-end pipeline.
//! * [`reference`]: published reference results kept as data.
//!
//! Each capability has a runnable program under `examples/`.

pub mod aligner;
pub mod cache;
pub mod cleaning;
pub mod corpus;
pub mod metrics;
pub mod ngram_analysis;
pub mod pipeline;
pub mod reference;
pub mod service;
pub mod similarity;
pub mod synth;
pub mod t2i;
pub mod waitk;

pub use corpus::{AlignedTriple, Dialogue, Provenance, Span, TokenSeq};
