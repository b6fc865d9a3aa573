use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::corpus::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    None,
    /// Each successive zero-match order gets precision `1 / (2^m * total)`.
    Exp,
}

impl std::str::FromStr for Smoothing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Smoothing::None),
            "exp" => Ok(Smoothing::Exp),
            other => Err(format!("unknown smoothing {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BleuTokenizer {
    /// The crate tokenizer: punctuation split off word edges.
    Builtin,
    /// Input is already tokenized; split on whitespace.
    Pretokenized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_n: usize,
    pub smoothing: Smoothing,
    pub lowercase: bool,
    pub tokenizer: BleuTokenizer,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_n: 4,
            smoothing: Smoothing::Exp,
            lowercase: false,
            tokenizer: BleuTokenizer::Builtin,
        }
    }
}

impl BleuConfig {
    fn tokens(&self, text: &str) -> Vec<String> {
        let mut tokens = match self.tokenizer {
            BleuTokenizer::Builtin => tokenize(text, false).tokens,
            BleuTokenizer::Pretokenized => text.split_whitespace().map(String::from).collect(),
        };
        if self.lowercase {
            for t in &mut tokens {
                *t = t.to_lowercase();
            }
        }
        tokens
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// Corpus BLEU in `[0, 100]`.
    pub score: f64,
    /// Per-order precisions in percent, after smoothing.
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub sys_len: usize,
    pub ref_len: usize,
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU with n-gram statistics pooled over all sentence pairs.
pub fn corpus_bleu<H, R>(
    hypotheses: &[H],
    references: &[R],
    config: &BleuConfig,
) -> Result<BleuScore, MetricsError>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    if config.max_n == 0 {
        return Err(MetricsError::InvalidConfig(
            "max_n must be at least 1".into(),
        ));
    }
    if hypotheses.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            hypotheses: hypotheses.len(),
            references: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }

    let max_n = config.max_n;
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let (mut sys_len, mut ref_len) = (0usize, 0usize);
    for (hyp, reference) in hypotheses.iter().zip(references) {
        let h = config.tokens(hyp.as_ref());
        let r = config.tokens(reference.as_ref());
        sys_len += h.len();
        ref_len += r.len();
        for n in 1..=max_n {
            let hc = ngram_counts(&h, n);
            let rc = ngram_counts(&r, n);
            totals[n - 1] += h.len().saturating_sub(n - 1);
            matches[n - 1] += hc
                .iter()
                .map(|(g, c)| (*c).min(rc.get(g).copied().unwrap_or(0)))
                .sum::<usize>();
        }
    }

    let mut precisions = vec![0.0; max_n];
    let mut smooth = 1.0;
    for n in 0..max_n {
        if totals[n] == 0 {
            break;
        }
        if matches[n] == 0 {
            if config.smoothing == Smoothing::Exp {
                smooth *= 2.0;
                precisions[n] = 100.0 / (smooth * totals[n] as f64);
            }
        } else {
            precisions[n] = 100.0 * matches[n] as f64 / totals[n] as f64;
        }
    }

    let brevity_penalty = if sys_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / sys_len as f64).min(0.0).exp()
    };
    let score = if precisions.iter().any(|&p| p == 0.0) || brevity_penalty == 0.0 {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| (p / 100.0).ln()).sum::<f64>() / max_n as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };
    Ok(BleuScore {
        score,
        precisions,
        brevity_penalty,
        sys_len,
        ref_len,
        matches,
        totals,
    })
}
