use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Link, T2iError};

/// Token standing for "aligned to nothing" on the source side.
pub const NULL: &str = "<NULL>";

/// Pairs per E-step work unit. Fixed so that count merging, and with it
/// every floating-point sum, is independent of the thread count.
const CHUNK: usize = 64;

/// Lexical translation probabilities `t(e | f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationTable {
    /// `probs[f][e] = t(e | f)`; pairs that never co-occur are absent.
    pub probs: BTreeMap<String, BTreeMap<String, f64>>,
    pub src_vocab: Vec<String>,
    pub tgt_vocab: Vec<String>,
}

impl TranslationTable {
    pub fn prob(&self, e: &str, f: &str) -> f64 {
        self.probs
            .get(f)
            .and_then(|row| row.get(e))
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Model1 {
    pub table: TranslationTable,
    /// Corpus log-likelihood under the parameters entering each iteration.
    pub log_likelihood: Vec<f64>,
    /// Pairs skipped because one side was empty.
    pub skipped: usize,
}

type Counts = HashMap<(u32, u32), f64>;

/// IBM Model 1 trained by EM from a uniform start, with one NULL token
/// prepended to every source sentence.
pub fn train_model1<S, T>(pairs: &[(S, T)], iterations: usize) -> Result<Model1, T2iError>
where
    S: AsRef<[String]> + Sync,
    T: AsRef<[String]> + Sync,
{
    if iterations == 0 {
        return Err(T2iError::Config("iterations must be at least 1".into()));
    }
    let mut src_ids: HashMap<&str, u32> = HashMap::new();
    let mut tgt_ids: HashMap<&str, u32> = HashMap::new();
    let mut src_vocab = vec![NULL.to_string()];
    let mut tgt_vocab = Vec::new();
    src_ids.insert(NULL, 0);
    let mut corpus: Vec<(Vec<u32>, Vec<u32>)> = Vec::new();
    let mut skipped = 0;
    for (s, t) in pairs {
        let (s, t) = (s.as_ref(), t.as_ref());
        if s.is_empty() || t.is_empty() {
            log::warn!("skipping pair with an empty side");
            skipped += 1;
            continue;
        }
        let mut src = vec![0];
        for w in s {
            let next = src_ids.len() as u32;
            let id = *src_ids.entry(w.as_str()).or_insert_with(|| {
                src_vocab.push(w.clone());
                next
            });
            src.push(id);
        }
        let mut tgt = Vec::new();
        for w in t {
            let next = tgt_ids.len() as u32;
            let id = *tgt_ids.entry(w.as_str()).or_insert_with(|| {
                tgt_vocab.push(w.clone());
                next
            });
            tgt.push(id);
        }
        corpus.push((src, tgt));
    }
    if corpus.is_empty() {
        return Err(T2iError::EmptyInput("no usable sentence pairs".into()));
    }

    let uniform = 1.0 / tgt_vocab.len() as f64;
    let mut t: Counts = HashMap::new();
    for (src, tgt) in &corpus {
        for &f in src {
            for &e in tgt {
                t.insert((f, e), uniform);
            }
        }
    }

    let mut log_likelihood = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let partials: Vec<(Counts, HashMap<u32, f64>, f64)> = corpus
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut counts: Counts = HashMap::new();
                let mut totals: HashMap<u32, f64> = HashMap::new();
                let mut ll = 0.0;
                for (src, tgt) in chunk {
                    for &e in tgt {
                        let denom: f64 = src.iter().map(|&f| t[&(f, e)]).sum();
                        ll += (denom / src.len() as f64).ln();
                        for &f in src {
                            let x = t[&(f, e)] / denom;
                            *counts.entry((f, e)).or_insert(0.0) += x;
                            *totals.entry(f).or_insert(0.0) += x;
                        }
                    }
                }
                (counts, totals, ll)
            })
            .collect();

        let mut counts: Counts = HashMap::new();
        let mut totals: HashMap<u32, f64> = HashMap::new();
        let mut ll = 0.0;
        for (c, tot, l) in partials {
            for (k, v) in c {
                *counts.entry(k).or_insert(0.0) += v;
            }
            for (k, v) in tot {
                *totals.entry(k).or_insert(0.0) += v;
            }
            ll += l;
        }
        log_likelihood.push(ll);
        for (key, value) in t.iter_mut() {
            *value = counts[key] / totals[&key.0];
        }
    }

    let mut probs: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (&(f, e), &p) in &t {
        probs
            .entry(src_vocab[f as usize].clone())
            .or_default()
            .insert(tgt_vocab[e as usize].clone(), p);
    }
    Ok(Model1 {
        table: TranslationTable {
            probs,
            src_vocab,
            tgt_vocab,
        },
        log_likelihood,
        skipped,
    })
}

/// Links each target word to its most probable source word, or to nothing
/// when NULL wins or the word is unknown. Ties go to the leftmost source
/// word; NULL only wins outright.
pub fn viterbi_align(src: &[String], tgt: &[String], table: &TranslationTable) -> Vec<Link> {
    let mut links = Vec::new();
    for (j, e) in tgt.iter().enumerate() {
        let null = table.prob(e, NULL);
        let mut best: Option<(usize, f64)> = None;
        for (i, f) in src.iter().enumerate() {
            let p = table.prob(e, f);
            if p > 0.0 && best.map_or(true, |(_, b)| p > b) {
                best = Some((i, p));
            }
        }
        if let Some((i, p)) = best {
            if p >= null {
                links.push((i, j));
            }
        }
    }
    links
}
