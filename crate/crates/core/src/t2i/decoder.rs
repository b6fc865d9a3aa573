use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lm::{NGramLM, BOS, EOS};
use super::phrases::PhraseTable;
use super::T2iError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovPolicy {
    Copy,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub tm: f64,
    pub tm_inv: f64,
    pub lm: f64,
    pub len: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            tm: 1.0,
            tm_inv: 1.0,
            lm: 1.0,
            len: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub beam: usize,
    /// Largest jump between the end of one phrase and the start of the
    /// next; 0 decodes monotonically.
    pub distortion_limit: usize,
    pub weights: Weights,
    pub oov_policy: OovPolicy,
    /// Translation options kept per source span, best `p(t|s)` first.
    pub options_per_span: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam: 16,
            distortion_limit: 0,
            weights: Weights::default(),
            oov_policy: OovPolicy::Copy,
            options_per_span: 20,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<(), T2iError> {
        if self.beam == 0 {
            return Err(T2iError::Config("beam must be at least 1".into()));
        }
        if self.options_per_span == 0 {
            return Err(T2iError::Config(
                "options_per_span must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Feature totals of a hypothesis. Log probabilities are natural logs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub tm: f64,
    pub tm_inv: f64,
    pub lm: f64,
    pub len: f64,
}

impl Features {
    pub fn score(&self, w: &Weights) -> f64 {
        w.tm * self.tm + w.tm_inv * self.tm_inv + w.lm * self.lm + w.len * self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationOption {
    pub span: (usize, usize),
    pub tgt: Vec<String>,
    pub ln_p_t_given_s: f64,
    pub ln_p_s_given_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub tokens: Vec<String>,
    pub score: f64,
    pub features: Features,
    pub phrases: usize,
}

/// Options for every source span, indexed by `(start, end)`.
pub fn collect_options(
    src: &[String],
    table: &PhraseTable,
    config: &DecoderConfig,
) -> HashMap<(usize, usize), Vec<TranslationOption>> {
    let n = src.len();
    let max_len = table.max_phrase_len.max(1);
    let mut options: HashMap<(usize, usize), Vec<TranslationOption>> = HashMap::new();
    for s in 0..n {
        for e in s + 1..=n.min(s + max_len) {
            let mut entries: Vec<_> = table.lookup(&src[s..e]).iter().collect();
            entries.sort_by(|a, b| {
                b.p_t_given_s
                    .total_cmp(&a.p_t_given_s)
                    .then_with(|| a.tgt.cmp(&b.tgt))
            });
            entries.truncate(config.options_per_span);
            if !entries.is_empty() {
                options.insert(
                    (s, e),
                    entries
                        .into_iter()
                        .map(|en| TranslationOption {
                            span: (s, e),
                            tgt: en.tgt.clone(),
                            ln_p_t_given_s: en.p_t_given_s.ln(),
                            ln_p_s_given_t: en.p_s_given_t.ln(),
                        })
                        .collect(),
                );
            }
        }
    }
    for (s, word) in src.iter().enumerate() {
        options.entry((s, s + 1)).or_insert_with(|| {
            let tgt = match config.oov_policy {
                OovPolicy::Copy => vec![word.clone()],
                OovPolicy::Drop => Vec::new(),
            };
            vec![TranslationOption {
                span: (s, s + 1),
                tgt,
                ln_p_t_given_s: 0.0,
                ln_p_s_given_t: 0.0,
            }]
        });
    }
    options
}

#[derive(Debug, Clone)]
struct Hyp {
    covered: Vec<bool>,
    last_end: usize,
    history: Vec<String>,
    output: Vec<String>,
    features: Features,
    score: f64,
    phrases: usize,
}

/// Better-first: higher score, then fewer phrases, then smaller output.
/// The remaining keys only make the order total.
fn rank(a: &Hyp, b: &Hyp) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.phrases.cmp(&b.phrases))
        .then_with(|| a.output.cmp(&b.output))
        .then_with(|| a.covered.cmp(&b.covered))
        .then(a.last_end.cmp(&b.last_end))
}

fn lm_ln(lm: &NGramLM, history: &[String], word: &str) -> f64 {
    lm.score(history, word) * std::f64::consts::LN_10
}

fn extend(hyp: &Hyp, opt: &TranslationOption, lm: &NGramLM, w: &Weights) -> Hyp {
    let mut covered = hyp.covered.clone();
    for c in &mut covered[opt.span.0..opt.span.1] {
        *c = true;
    }
    let mut history = hyp.history.clone();
    let mut features = hyp.features;
    features.tm += opt.ln_p_t_given_s;
    features.tm_inv += opt.ln_p_s_given_t;
    features.len += opt.tgt.len() as f64;
    let mut output = hyp.output.clone();
    for word in &opt.tgt {
        features.lm += lm_ln(lm, &history, word);
        history.push(word.clone());
        output.push(word.clone());
    }
    let history = lm.state(&history);
    Hyp {
        covered,
        last_end: opt.span.1,
        history,
        output,
        score: features.score(w),
        features,
        phrases: hyp.phrases + 1,
    }
}

fn finish(hyp: &Hyp, lm: &NGramLM, w: &Weights) -> Decoded {
    let mut features = hyp.features;
    features.lm += lm_ln(lm, &hyp.history, EOS);
    Decoded {
        tokens: hyp.output.clone(),
        score: features.score(w),
        features,
        phrases: hyp.phrases,
    }
}

fn rank_decoded(a: &Decoded, b: &Decoded) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.phrases.cmp(&b.phrases))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Stack decoding over source coverage. Hypotheses covering the same words
/// with the same last position and language-model state are recombined.
pub fn decode_scored(
    src: &[String],
    table: &PhraseTable,
    lm: &NGramLM,
    config: &DecoderConfig,
) -> Result<Decoded, T2iError> {
    config.validate()?;
    let n = src.len();
    let w = &config.weights;
    if n == 0 {
        let empty = Hyp {
            covered: Vec::new(),
            last_end: 0,
            history: lm.state(&[BOS.to_string()]),
            output: Vec::new(),
            features: Features::default(),
            score: 0.0,
            phrases: 0,
        };
        return Ok(finish(&empty, lm, w));
    }
    let options = collect_options(src, table, config);
    let mut spans: Vec<&(usize, usize)> = options.keys().collect();
    spans.sort();

    let mut stacks: Vec<Vec<Hyp>> = vec![Vec::new(); n + 1];
    stacks[0].push(Hyp {
        covered: vec![false; n],
        last_end: 0,
        history: lm.state(&[BOS.to_string()]),
        output: Vec::new(),
        features: Features::default(),
        score: 0.0,
        phrases: 0,
    });

    for size in 0..n {
        let mut current = std::mem::take(&mut stacks[size]);
        recombine(&mut current);
        current.truncate(config.beam);
        for hyp in &current {
            for &&(s, e) in &spans {
                if hyp.covered[s..e].iter().any(|&c| c) {
                    continue;
                }
                if s.abs_diff(hyp.last_end) > config.distortion_limit {
                    continue;
                }
                for opt in &options[&(s, e)] {
                    let next = extend(hyp, opt, lm, w);
                    stacks[size + (e - s)].push(next);
                }
            }
        }
    }

    match stacks[n]
        .iter()
        .map(|h| finish(h, lm, w))
        .min_by(rank_decoded)
    {
        Some(best) => Ok(best),
        // reordering can strand every surviving hypothesis; monotone
        // decoding always completes
        None if config.distortion_limit > 0 => decode_scored(
            src,
            table,
            lm,
            &DecoderConfig {
                distortion_limit: 0,
                ..*config
            },
        ),
        None => Err(T2iError::Config("no hypothesis covers the input".into())),
    }
}

fn recombine(stack: &mut Vec<Hyp>) {
    let mut best: HashMap<(Vec<bool>, usize, Vec<String>), Hyp> = HashMap::new();
    for hyp in stack.drain(..) {
        let key = (hyp.covered.clone(), hyp.last_end, hyp.history.clone());
        match best.get(&key) {
            Some(existing) if rank(existing, &hyp) != Ordering::Greater => {}
            _ => {
                best.insert(key, hyp);
            }
        }
    }
    stack.extend(best.into_values());
    stack.sort_by(rank);
}

/// Best rewrite of `src` under the model.
pub fn decode(
    src: &[String],
    table: &PhraseTable,
    lm: &NGramLM,
    config: &DecoderConfig,
) -> Result<Vec<String>, T2iError> {
    decode_scored(src, table, lm, config).map(|d| d.tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::t2i::lm::{train_lm, LmSmoothing};
    use std::collections::BTreeMap;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn identity_model_copies_input() {
        let sentence = toks("we will vote on this tomorrow");
        let table = PhraseTable::identity(sentence.clone());
        let lm = NGramLM::uniform(sentence.clone());
        let out = decode(&sentence, &table, &lm, &DecoderConfig::default()).unwrap();
        assert_eq!(out, sentence);
        assert!(decode(&[], &table, &lm, &DecoderConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn oov_policies() {
        let table = PhraseTable::identity(["a"]);
        let lm = NGramLM::uniform(["a"]);
        let copy = decode(&toks("a zz a"), &table, &lm, &DecoderConfig::default()).unwrap();
        assert_eq!(copy, toks("a zz a"));
        let drop = DecoderConfig {
            oov_policy: OovPolicy::Drop,
            ..DecoderConfig::default()
        };
        assert_eq!(
            decode(&toks("a zz a"), &table, &lm, &drop).unwrap(),
            toks("a a")
        );
    }

    #[test]
    fn phrase_rewrite() {
        let mut counts = BTreeMap::new();
        for w in toks("i would urge you to endorse this .") {
            counts.insert((vec![w.clone()], vec![w]), 1);
        }
        counts.insert(
            (toks("urge you to endorse"), toks("ask you to agree with")),
            1,
        );
        let table = PhraseTable::from_counts(counts, 4);
        let lm = train_lm(
            &[
                toks("i would ask you to agree with this ."),
                toks("we ask you to agree with that ."),
            ],
            3,
            LmSmoothing::WittenBell,
        )
        .unwrap();
        let out = decode(
            &toks("i would urge you to endorse this ."),
            &table,
            &lm,
            &DecoderConfig::default(),
        )
        .unwrap();
        assert_eq!(out, toks("i would ask you to agree with this ."));
    }

    #[test]
    fn wider_beam_never_worse() {
        let mut counts = BTreeMap::new();
        for (s, t, c) in [
            ("a", "x", 3),
            ("a", "y", 1),
            ("b", "z", 2),
            ("b", "x", 2),
            ("a b", "y y", 1),
            ("c", "z", 1),
            ("b c", "x z", 1),
        ] {
            counts.insert((toks(s), toks(t)), c);
        }
        let table = PhraseTable::from_counts(counts, 2);
        let lm = train_lm(
            &[toks("x y z"), toks("y y z"), toks("z x")],
            2,
            LmSmoothing::WittenBell,
        )
        .unwrap();
        let src = toks("a b c a b");
        let narrow = DecoderConfig {
            beam: 1,
            ..DecoderConfig::default()
        };
        let a = decode_scored(&src, &table, &lm, &narrow).unwrap();
        let b = decode_scored(&src, &table, &lm, &DecoderConfig::default()).unwrap();
        assert!(b.score >= a.score);
    }

    #[test]
    fn distortion_allows_reordering() {
        let mut counts = BTreeMap::new();
        counts.insert((toks("a"), toks("a")), 1);
        counts.insert((toks("b"), toks("b")), 1);
        let table = PhraseTable::from_counts(counts, 1);
        let lm = train_lm(&[toks("b a"), toks("b a")], 2, LmSmoothing::WittenBell).unwrap();
        let mono = decode(&toks("a b"), &table, &lm, &DecoderConfig::default()).unwrap();
        assert_eq!(mono, toks("a b"));
        let window = DecoderConfig {
            distortion_limit: 2,
            ..DecoderConfig::default()
        };
        assert_eq!(
            decode(&toks("a b"), &table, &lm, &window).unwrap(),
            toks("b a")
        );
    }

    #[test]
    fn invalid_config() {
        let table = PhraseTable::identity(["a"]);
        let lm = NGramLM::uniform(["a"]);
        let bad = DecoderConfig {
            beam: 0,
            ..DecoderConfig::default()
        };
        assert!(decode(&toks("a"), &table, &lm, &bad).is_err());
    }
}
