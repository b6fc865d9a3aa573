//! Translation quality (corpus BLEU) and latency (AP, AL).

mod bleu;
mod latency;

use thiserror::Error;

pub use bleu::{corpus_bleu, BleuConfig, BleuScore, BleuTokenizer, Smoothing};
pub use latency::{
    average_lagging, average_proportion, corpus_latency, LatencySummary, ReadWriteSchedule,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty hypothesis")]
    EmptyHypothesis,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch {
        hypotheses: usize,
        references: usize,
    },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid BLEU configuration: {0}")]
    InvalidConfig(String),
}
