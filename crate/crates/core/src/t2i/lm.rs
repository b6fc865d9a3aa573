use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::T2iError;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
/// log10 probability of a word the model has never seen.
pub const UNK_LOG10: f64 = -7.0;
/// Conventional log10 probability stored for `<s>`, which is never predicted.
const BOS_LOG10: f64 = -99.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmSmoothing {
    WittenBell,
}

/// Back-off n-gram language model with log10 probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramLM {
    pub order: usize,
    pub prob: BTreeMap<Vec<String>, f64>,
    pub backoff: BTreeMap<Vec<String>, f64>,
}

/// Interpolated Witten-Bell estimates, stored in back-off form.
///
/// `p(w | h) = (c(h w) + T(h) p(w | h')) / (c(h) + T(h))` where `T(h)` is
/// the number of distinct words seen after `h` and `h'` drops the oldest
/// word of `h`. Unigrams interpolate with a uniform distribution over the
/// vocabulary, which includes `</s>`.
pub fn train_lm<S: AsRef<[String]>>(
    corpus: &[S],
    order: usize,
    smoothing: LmSmoothing,
) -> Result<NGramLM, T2iError> {
    let LmSmoothing::WittenBell = smoothing;
    if order == 0 {
        return Err(T2iError::Config(
            "language model order must be at least 1".into(),
        ));
    }
    if corpus.is_empty() {
        return Err(T2iError::EmptyInput("language model corpus".into()));
    }

    // counts[n-1][ngram] for every n-gram ending at a predicted position
    let mut counts: Vec<HashMap<Vec<String>, u64>> = vec![HashMap::new(); order];
    for sentence in corpus {
        let mut padded = vec![BOS.to_string()];
        padded.extend(sentence.as_ref().iter().cloned());
        padded.push(EOS.to_string());
        for p in 1..padded.len() {
            for n in 1..=order.min(p + 1) {
                let gram = padded[p + 1 - n..=p].to_vec();
                *counts[n - 1].entry(gram).or_insert(0) += 1;
            }
        }
    }

    // per-context totals and distinct followers
    let mut context_total: HashMap<Vec<String>, (u64, u64)> = HashMap::new();
    for level in &counts {
        for (gram, &c) in level {
            let entry = context_total
                .entry(gram[..gram.len() - 1].to_vec())
                .or_insert((0, 0));
            entry.0 += c;
            entry.1 += 1;
        }
    }

    let vocab: BTreeSet<&Vec<String>> = counts[0].keys().collect();
    let uniform = 1.0 / vocab.len() as f64;

    // linear probabilities, lower orders first so interpolation can look down
    let mut linear: HashMap<Vec<String>, f64> = HashMap::new();
    for (n, level) in counts.iter().enumerate() {
        let mut grams: Vec<(&Vec<String>, &u64)> = level.iter().collect();
        grams.sort();
        for (gram, &c) in grams {
            let context = &gram[..n];
            let (total, types) = context_total[context];
            let lower = if n == 0 { uniform } else { linear[&gram[1..]] };
            let p = (c as f64 + types as f64 * lower) / (total as f64 + types as f64);
            linear.insert(gram.clone(), p);
        }
    }

    let mut prob: BTreeMap<Vec<String>, f64> =
        linear.iter().map(|(g, p)| (g.clone(), p.log10())).collect();
    prob.insert(vec![BOS.to_string()], BOS_LOG10);

    let mut backoff = BTreeMap::new();
    for (context, &(total, types)) in &context_total {
        if context.is_empty() || context.len() >= order {
            continue;
        }
        let alpha = types as f64 / (total as f64 + types as f64);
        backoff.insert(context.clone(), alpha.log10());
    }

    Ok(NGramLM {
        order,
        prob,
        backoff,
    })
}

impl NGramLM {
    /// Unigram model assigning every listed word (and `</s>`) the same
    /// probability.
    pub fn uniform<I, S>(vocab: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut words: BTreeSet<String> = vocab.into_iter().map(Into::into).collect();
        words.insert(EOS.to_string());
        let p = (1.0 / words.len() as f64).log10();
        let mut prob: BTreeMap<Vec<String>, f64> =
            words.into_iter().map(|w| (vec![w], p)).collect();
        prob.insert(vec![BOS.to_string()], BOS_LOG10);
        NGramLM {
            order: 1,
            prob,
            backoff: BTreeMap::new(),
        }
    }

    /// Words with a unigram entry, excluding `<s>`.
    pub fn vocabulary(&self) -> Vec<&str> {
        self.prob
            .keys()
            .filter(|g| g.len() == 1 && g[0] != BOS)
            .map(|g| g[0].as_str())
            .collect()
    }

    /// log10 p(word | history). Only the last `order - 1` words of the
    /// history matter.
    pub fn score(&self, history: &[String], word: &str) -> f64 {
        let keep = history.len().min(self.order.saturating_sub(1));
        let mut context = &history[history.len() - keep..];
        let mut penalty = 0.0;
        loop {
            let mut gram = context.to_vec();
            gram.push(word.to_string());
            if let Some(p) = self.prob.get(&gram) {
                return penalty + p;
            }
            if context.is_empty() {
                return penalty + UNK_LOG10;
            }
            penalty += self.backoff.get(context).copied().unwrap_or(0.0);
            context = &context[1..];
        }
    }

    /// Longest suffix of `history` that can still influence future scores.
    pub fn state(&self, history: &[String]) -> Vec<String> {
        let keep = history.len().min(self.order.saturating_sub(1));
        history[history.len() - keep..].to_vec()
    }

    /// log10 probability of a whole sentence including `</s>`.
    pub fn sentence_logprob(&self, words: &[String]) -> f64 {
        let mut history = vec![BOS.to_string()];
        let mut total = 0.0;
        for w in words {
            total += self.score(&history, w);
            history.push(w.clone());
        }
        total + self.score(&history, EOS)
    }

    pub fn to_arpa(&self) -> String {
        let mut out = String::from("\n\\data\\\n");
        for n in 1..=self.order {
            let count = self.prob.keys().filter(|g| g.len() == n).count();
            writeln!(out, "ngram {n}={count}").expect("string write");
        }
        for n in 1..=self.order {
            writeln!(out, "\n\\{n}-grams:").expect("string write");
            for (gram, p) in self.prob.iter().filter(|(g, _)| g.len() == n) {
                write!(out, "{p:?}\t{}", gram.join(" ")).expect("string write");
                if let Some(b) = self.backoff.get(gram) {
                    write!(out, "\t{b:?}").expect("string write");
                }
                out.push('\n');
            }
        }
        out.push_str("\n\\end\\\n");
        out
    }

    pub fn from_arpa(text: &str) -> Result<Self, T2iError> {
        let bad = |n: usize, why: &str| T2iError::Format(format!("ARPA line {}: {why}", n + 1));
        let mut prob = BTreeMap::new();
        let mut backoff = BTreeMap::new();
        let mut declared: BTreeMap<usize, usize> = BTreeMap::new();
        let mut section: Option<usize> = None;
        let mut ended = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line == "\\data\\" {
                continue;
            }
            if line == "\\end\\" {
                ended = true;
                break;
            }
            if let Some(rest) = line.strip_prefix("ngram ") {
                let (n, c) = rest
                    .split_once('=')
                    .ok_or_else(|| bad(i, "bad ngram count"))?;
                let n: usize = n.trim().parse().map_err(|_| bad(i, "bad order"))?;
                let c: usize = c.trim().parse().map_err(|_| bad(i, "bad count"))?;
                declared.insert(n, c);
                continue;
            }
            if let Some(n) = line
                .strip_prefix('\\')
                .and_then(|l| l.strip_suffix("-grams:"))
            {
                section = Some(n.parse().map_err(|_| bad(i, "bad section header"))?);
                continue;
            }
            let n = section.ok_or_else(|| bad(i, "entry outside an n-gram section"))?;
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(bad(i, "expected prob, n-gram and optional backoff"));
            }
            let p: f64 = fields[0]
                .trim()
                .parse()
                .map_err(|_| bad(i, "bad probability"))?;
            let gram: Vec<String> = fields[1].split_whitespace().map(String::from).collect();
            if gram.len() != n {
                return Err(bad(i, "n-gram length does not match section"));
            }
            if let Some(b) = fields.get(2) {
                let b: f64 = b.trim().parse().map_err(|_| bad(i, "bad backoff"))?;
                backoff.insert(gram.clone(), b);
            }
            prob.insert(gram, p);
        }
        if !ended {
            return Err(T2iError::Format("ARPA file has no \\end\\ marker".into()));
        }
        let order = declared.keys().copied().max().unwrap_or(0);
        if order == 0 {
            return Err(T2iError::Format("ARPA file declares no n-grams".into()));
        }
        for (n, c) in declared {
            let found = prob.keys().filter(|g| g.len() == n).count();
            if found != c {
                return Err(T2iError::Format(format!(
                    "ARPA declares {c} {n}-grams but lists {found}"
                )));
            }
        }
        Ok(NGramLM {
            order,
            prob,
            backoff,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, T2iError> {
        NGramLM::from_arpa(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines.iter().map(|l| toks(l)).collect()
    }

    #[test]
    fn hand_computed_bigram() {
        let lm = train_lm(&corpus(&["a b", "a b"]), 2, LmSmoothing::WittenBell).unwrap();
        // unigrams: c(a)=c(b)=c(</s>)=2, N=6, T=3, |V|=3: p(b) = (2 + 3/3) / 9
        // context a: c=2, T=1: p(b|a) = (2 + 1 * 1/3) / 3 = 7/9
        let p = 10f64.powf(lm.score(&toks("a"), "b"));
        assert!((p - 7.0 / 9.0).abs() < 1e-12);
        let unseen = 10f64.powf(lm.score(&toks("a"), "a"));
        // back-off weight T/(c+T) = 1/3 times p(a) = 1/3
        assert!((unseen - 1.0 / 9.0).abs() < 1e-12);
        assert!(lm.sentence_logprob(&toks("a b")) > lm.sentence_logprob(&toks("b a")));
    }

    #[test]
    fn unknown_word_floor() {
        let lm = train_lm(&corpus(&["a b"]), 3, LmSmoothing::WittenBell).unwrap();
        let s = lm.score(&toks("a b"), "zzz");
        assert!(s.is_finite());
        assert!(s <= UNK_LOG10);
        assert_eq!(lm.score(&[], "zzz"), UNK_LOG10);
    }

    #[test]
    fn config_errors() {
        assert!(train_lm(&corpus(&["a"]), 0, LmSmoothing::WittenBell).is_err());
        assert!(train_lm::<Vec<String>>(&[], 2, LmSmoothing::WittenBell).is_err());
    }

    #[test]
    fn arpa_round_trip() {
        let lm = train_lm(
            &corpus(&["the vote is closed", "the debate is closed", "thank you"]),
            3,
            LmSmoothing::WittenBell,
        )
        .unwrap();
        let text = lm.to_arpa();
        assert!(text.contains("\\3-grams:"));
        let back = NGramLM::from_arpa(&text).unwrap();
        assert_eq!(back, lm);
        assert!(NGramLM::from_arpa("\\data\\\nngram 1=2\n\n\\1-grams:\n-1\ta\n\\end\\\n").is_err());
        assert!(NGramLM::from_arpa("\\data\\\nngram 1=1\n\\1-grams:\n-1\ta\n").is_err());
    }

    #[test]
    fn backoff_entries_for_prefixes() {
        let lm = train_lm(&corpus(&["a b c", "b c a"]), 3, LmSmoothing::WittenBell).unwrap();
        for gram in lm.prob.keys().filter(|g| g.len() == 3) {
            assert!(lm.backoff.contains_key(&gram[..2]), "{gram:?}");
        }
        assert!(lm.prob.values().all(|&p| p <= 0.0));
    }

    #[test]
    fn uniform_model() {
        let lm = NGramLM::uniform(["a", "b", "c"]);
        assert_eq!(lm.score(&[], "a"), lm.score(&toks("b"), "c"));
        assert_eq!(lm.vocabulary(), ["</s>", "a", "b", "c"]);
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
        prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..6)
                .prop_map(|w| w.into_iter().map(String::from).collect()),
            1..8,
        )
    }

    proptest! {
        #[test]
        fn contexts_are_distributions(c in arb_corpus(), order in 1usize..4) {
            let lm = train_lm(&c, order, LmSmoothing::WittenBell).unwrap();
            let vocab: Vec<String> = lm.vocabulary().into_iter().map(String::from).collect();
            let mut contexts: Vec<Vec<String>> = lm.backoff.keys().cloned().collect();
            contexts.push(vec![]);
            for h in contexts {
                let mass: f64 = vocab.iter().map(|w| 10f64.powf(lm.score(&h, w))).sum();
                prop_assert!((mass - 1.0).abs() < 1e-4, "context {:?}: {}", h, mass);
            }
        }
    }
}
