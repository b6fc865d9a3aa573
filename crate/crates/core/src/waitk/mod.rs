//! Wait-k simultaneous decoding over pluggable incremental generators.
//!
//! The policy works on whitespace tokens: it reads `k` source tokens, then
//! alternates one write with one read until the source is exhausted, and
//! finally writes until the generator stops or the output cap is hit.

mod generator;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{
    corpus_bleu, corpus_latency, BleuConfig, LatencySummary, MetricsError, ReadWriteSchedule,
};

pub use generator::{
    generator_from_spec, sentence_key, EchoGenerator, GeneratorError, IncrementalGenerator,
    ProcessGenerator, Step, StepRequest, TableGenerator,
};

#[derive(Debug, Error)]
pub enum WaitKError {
    #[error("empty source sentence")]
    EmptySource,
    #[error("invalid wait-k configuration: {0}")]
    InvalidConfig(String),
    #[error("generator failed at sentence {sentence}, target position {position}: {source}")]
    Generator {
        sentence: usize,
        position: usize,
        source: GeneratorError,
    },
    #[error("line count mismatch: {sources} sources, {translations} translation refs, {interpretations} interpretation refs")]
    LineCountMismatch {
        sources: usize,
        translations: usize,
        interpretations: usize,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaitKConfig {
    pub k: usize,
    /// Output is capped at `floor(max_target_factor * |x|) + 10` tokens.
    pub max_target_factor: f64,
}

impl Default for WaitKConfig {
    fn default() -> Self {
        WaitKConfig {
            k: 3,
            max_target_factor: 2.0,
        }
    }
}

impl WaitKConfig {
    pub fn new(k: usize) -> Self {
        WaitKConfig {
            k,
            ..WaitKConfig::default()
        }
    }

    pub fn cap(&self, src_len: usize) -> usize {
        (self.max_target_factor * src_len as f64).floor() as usize + 10
    }

    fn validate(&self) -> Result<(), WaitKError> {
        if self.k == 0 {
            return Err(WaitKError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.max_target_factor.is_finite() && self.max_target_factor >= 0.0) {
            return Err(WaitKError::InvalidConfig(
                "max_target_factor must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub hypothesis: Vec<String>,
    pub schedule: ReadWriteSchedule,
}

impl Simulation {
    pub fn text(&self) -> String {
        self.hypothesis.join(" ")
    }
}

fn simulate_indexed(
    index: usize,
    source: &[String],
    config: &WaitKConfig,
    generator: &dyn IncrementalGenerator,
) -> Result<Simulation, WaitKError> {
    config.validate()?;
    if source.is_empty() {
        return Err(WaitKError::EmptySource);
    }
    let key = sentence_key(source);
    let cap = config.cap(source.len());
    let mut read = config.k.min(source.len());
    let mut target: Vec<String> = Vec::new();
    let mut g = Vec::new();
    while target.len() < cap {
        let request = StepRequest {
            sentence_key: &key,
            source_prefix: &source[..read],
            target_prefix: &target,
        };
        let step = generator
            .next_token(&request)
            .map_err(|source| WaitKError::Generator {
                sentence: index,
                position: target.len() + 1,
                source,
            })?;
        match step {
            Step::End => break,
            Step::Token(token) => {
                target.push(token);
                g.push(read);
                if read < source.len() {
                    read += 1;
                }
            }
        }
    }
    let schedule = ReadWriteSchedule::new(g, source.len())?;
    Ok(Simulation {
        hypothesis: target,
        schedule,
    })
}

/// Decodes one source sentence under the wait-k policy.
pub fn simulate_waitk(
    source: &[String],
    config: &WaitKConfig,
    generator: &dyn IncrementalGenerator,
) -> Result<Simulation, WaitKError> {
    simulate_indexed(0, source, config, generator)
}

/// Decodes every line (split on whitespace) in parallel; output order
/// follows input order.
pub fn simulate_corpus<S: AsRef<str> + Sync>(
    sources: &[S],
    config: &WaitKConfig,
    generator: &dyn IncrementalGenerator,
) -> Result<Vec<Simulation>, WaitKError> {
    sources
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let tokens: Vec<String> = s.as_ref().split_whitespace().map(String::from).collect();
            simulate_indexed(i, &tokens, config, generator)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub generator: String,
    pub k: usize,
    pub n_sentences: usize,
    pub bleu_translation: f64,
    pub bleu_interpretation: f64,
    /// `bleu_translation - bleu_interpretation`.
    pub gap: f64,
    /// Latency is shared by both reference sets: it depends only on the
    /// source side.
    pub latency: LatencySummary,
    pub latency_unit: String,
}

/// Simulates the sources and scores the output against both reference
/// sets.
pub fn run_eval<S, T, U>(
    sources: &[S],
    refs_translation: &[T],
    refs_interpretation: &[U],
    config: &WaitKConfig,
    generator: &dyn IncrementalGenerator,
    bleu: &BleuConfig,
) -> Result<(EvalReport, Vec<Simulation>), WaitKError>
where
    S: AsRef<str> + Sync,
    T: AsRef<str>,
    U: AsRef<str>,
{
    if sources.len() != refs_translation.len() || sources.len() != refs_interpretation.len() {
        return Err(WaitKError::LineCountMismatch {
            sources: sources.len(),
            translations: refs_translation.len(),
            interpretations: refs_interpretation.len(),
        });
    }
    let sims = simulate_corpus(sources, config, generator)?;
    let report = score_simulations(
        generator.id(),
        config.k,
        &sims,
        refs_translation,
        refs_interpretation,
        bleu,
    )?;
    Ok((report, sims))
}

/// Scores finished simulations against both reference sets.
pub fn score_simulations<T, U>(
    generator: &str,
    k: usize,
    simulations: &[Simulation],
    refs_translation: &[T],
    refs_interpretation: &[U],
    bleu: &BleuConfig,
) -> Result<EvalReport, WaitKError>
where
    T: AsRef<str>,
    U: AsRef<str>,
{
    if simulations.len() != refs_translation.len() || simulations.len() != refs_interpretation.len()
    {
        return Err(WaitKError::LineCountMismatch {
            sources: simulations.len(),
            translations: refs_translation.len(),
            interpretations: refs_interpretation.len(),
        });
    }
    let hyps: Vec<String> = simulations.iter().map(Simulation::text).collect();
    let bleu_translation = corpus_bleu(&hyps, refs_translation, bleu)?.score;
    let bleu_interpretation = corpus_bleu(&hyps, refs_interpretation, bleu)?.score;
    let schedules: Vec<ReadWriteSchedule> =
        simulations.iter().map(|s| s.schedule.clone()).collect();
    Ok(EvalReport {
        generator: generator.to_string(),
        k,
        n_sentences: simulations.len(),
        bleu_translation,
        bleu_interpretation,
        gap: bleu_translation - bleu_interpretation,
        latency: corpus_latency(&schedules),
        latency_unit: "word".into(),
    })
}

#[cfg(test)]
mod tests;
