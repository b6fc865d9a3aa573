use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Link, T2iError};
use crate::corpus::Span;

/// Source and target spans of one extracted phrase pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PhraseSpans {
    pub src: Span,
    pub tgt: Span,
}

/// All phrase pairs consistent with `links` whose sides are at most
/// `max_len` tokens long. A pair is consistent when it contains at least
/// one link and no link connects a word inside it to a word outside it;
/// unaligned target words at the edges extend the pair.
pub fn extract_phrases(
    src_len: usize,
    tgt_len: usize,
    links: &[Link],
    max_len: usize,
) -> Vec<PhraseSpans> {
    let mut tgt_aligned = vec![false; tgt_len];
    for &(_, j) in links {
        tgt_aligned[j] = true;
    }
    let mut out = BTreeSet::new();
    for s1 in 0..src_len {
        for s2 in s1..src_len.min(s1 + max_len) {
            let inside: Vec<usize> = links
                .iter()
                .filter(|(i, _)| (s1..=s2).contains(i))
                .map(|&(_, j)| j)
                .collect();
            let (Some(&t1), Some(&t2)) = (inside.iter().min(), inside.iter().max()) else {
                continue;
            };
            if t2 - t1 + 1 > max_len {
                continue;
            }
            let leaks = links
                .iter()
                .any(|&(i, j)| (t1..=t2).contains(&j) && !(s1..=s2).contains(&i));
            if leaks {
                continue;
            }
            let mut lo = t1;
            loop {
                let mut hi = t2;
                loop {
                    if hi - lo < max_len {
                        out.insert(PhraseSpans {
                            src: Span::new(s1, s2 + 1),
                            tgt: Span::new(lo, hi + 1),
                        });
                    }
                    if hi + 1 >= tgt_len || tgt_aligned[hi + 1] || hi + 1 - lo >= max_len {
                        break;
                    }
                    hi += 1;
                }
                if lo == 0 || tgt_aligned[lo - 1] || t2 + 1 - (lo - 1) > max_len {
                    break;
                }
                lo -= 1;
            }
        }
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseEntry {
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    pub p_t_given_s: f64,
    pub p_s_given_t: f64,
    pub count: u64,
}

/// Relative-frequency phrase translation table, sorted by source then
/// target phrase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseTable {
    pub entries: Vec<PhraseEntry>,
    pub max_phrase_len: usize,
}

impl PhraseTable {
    /// Counts phrase pairs over an aligned corpus and normalizes in both
    /// directions.
    pub fn from_aligned<S, T>(corpus: &[(S, T, Vec<Link>)], max_phrase_len: usize) -> Self
    where
        S: AsRef<[String]>,
        T: AsRef<[String]>,
    {
        let mut pair_counts: BTreeMap<(Vec<String>, Vec<String>), u64> = BTreeMap::new();
        for (src, tgt, links) in corpus {
            let (src, tgt) = (src.as_ref(), tgt.as_ref());
            for p in extract_phrases(src.len(), tgt.len(), links, max_phrase_len) {
                let key = (src[p.src.range()].to_vec(), tgt[p.tgt.range()].to_vec());
                *pair_counts.entry(key).or_insert(0) += 1;
            }
        }
        PhraseTable::from_counts(pair_counts, max_phrase_len)
    }

    pub fn from_counts(
        pair_counts: BTreeMap<(Vec<String>, Vec<String>), u64>,
        max_phrase_len: usize,
    ) -> Self {
        let mut src_totals: BTreeMap<&[String], u64> = BTreeMap::new();
        let mut tgt_totals: BTreeMap<&[String], u64> = BTreeMap::new();
        for ((s, t), c) in &pair_counts {
            *src_totals.entry(s).or_insert(0) += c;
            *tgt_totals.entry(t).or_insert(0) += c;
        }
        let entries = pair_counts
            .iter()
            .map(|((s, t), &c)| PhraseEntry {
                src: s.clone(),
                tgt: t.clone(),
                p_t_given_s: c as f64 / src_totals[s.as_slice()] as f64,
                p_s_given_t: c as f64 / tgt_totals[t.as_slice()] as f64,
                count: c,
            })
            .collect();
        PhraseTable {
            entries,
            max_phrase_len,
        }
    }

    /// Entries for one source phrase.
    pub fn lookup(&self, src: &[String]) -> &[PhraseEntry] {
        let start = self.entries.partition_point(|e| e.src.as_slice() < src);
        let end = start + self.entries[start..].partition_point(|e| e.src.as_slice() == src);
        &self.entries[start..end]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `src ||| tgt ||| p_t_given_s p_s_given_t count`, one entry per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            writeln!(
                out,
                "{} ||| {} ||| {:?} {:?} {}",
                e.src.join(" "),
                e.tgt.join(" "),
                e.p_t_given_s,
                e.p_s_given_t,
                e.count
            )
            .expect("string write");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, T2iError> {
        let mut entries = Vec::new();
        let mut max_phrase_len = 0;
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |why: &str| T2iError::Format(format!("phrase table line {}: {why}", n + 1));
            let fields: Vec<&str> = line.split(" ||| ").collect();
            if fields.len() != 3 {
                return Err(bad("expected three ||| separated fields"));
            }
            let nums: Vec<&str> = fields[2].split_whitespace().collect();
            if nums.len() != 3 {
                return Err(bad("expected two probabilities and a count"));
            }
            let prob = |s: &str| -> Result<f64, T2iError> {
                let p: f64 = s.parse().map_err(|_| bad("bad probability"))?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(bad("probability outside (0, 1]"));
                }
                Ok(p)
            };
            let entry = PhraseEntry {
                src: fields[0].split_whitespace().map(String::from).collect(),
                tgt: fields[1].split_whitespace().map(String::from).collect(),
                p_t_given_s: prob(nums[0])?,
                p_s_given_t: prob(nums[1])?,
                count: nums[2].parse().map_err(|_| bad("bad count"))?,
            };
            if entry.src.is_empty() {
                return Err(bad("empty source phrase"));
            }
            max_phrase_len = max_phrase_len.max(entry.src.len()).max(entry.tgt.len());
            entries.push(entry);
        }
        entries.sort_by(|a, b| (&a.src, &a.tgt).cmp(&(&b.src, &b.tgt)));
        Ok(PhraseTable {
            entries,
            max_phrase_len,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, T2iError> {
        PhraseTable::from_tsv(&std::fs::read_to_string(path)?)
    }

    /// Every word maps to itself with probability one.
    pub fn identity<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut counts = BTreeMap::new();
        for w in words {
            let w = w.into();
            counts.insert((vec![w.clone()], vec![w]), 1);
        }
        PhraseTable::from_counts(counts, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    /// Independent oracle: test every span pair against the definition.
    fn brute(src_len: usize, tgt_len: usize, links: &[Link], max_len: usize) -> Vec<PhraseSpans> {
        let mut out = Vec::new();
        for s1 in 0..src_len {
            for s2 in s1 + 1..=src_len.min(s1 + max_len) {
                for t1 in 0..tgt_len {
                    for t2 in t1 + 1..=tgt_len.min(t1 + max_len) {
                        let in_s = |i: usize| s1 <= i && i < s2;
                        let in_t = |j: usize| t1 <= j && j < t2;
                        let any = links.iter().any(|&(i, j)| in_s(i) && in_t(j));
                        let crossing = links.iter().any(|&(i, j)| in_s(i) != in_t(j));
                        if any && !crossing {
                            out.push(PhraseSpans {
                                src: Span::new(s1, s2),
                                tgt: Span::new(t1, t2),
                            });
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn monotone_diagonal() {
        let links = vec![(0, 0), (1, 1), (2, 2)];
        let got = extract_phrases(3, 3, &links, 2);
        let spans: Vec<((usize, usize), (usize, usize))> =
            got.iter().map(|p| (p.src.into(), p.tgt.into())).collect();
        assert_eq!(
            spans,
            [
                ((0, 1), (0, 1)),
                ((0, 2), (0, 2)),
                ((1, 2), (1, 2)),
                ((1, 3), (1, 3)),
                ((2, 3), (2, 3))
            ]
        );
    }

    #[test]
    fn no_links_no_phrases() {
        assert!(extract_phrases(3, 3, &[], 3).is_empty());
    }

    #[test]
    fn crossing_link_blocks_span() {
        // source 0 links to target 2, so source [0,1) with target [0,1) is out
        let links = vec![(0, 2), (1, 1), (2, 0)];
        let got = extract_phrases(3, 3, &links, 3);
        assert!(!got.contains(&PhraseSpans {
            src: Span::new(0, 2),
            tgt: Span::new(0, 2)
        }));
        assert!(got.contains(&PhraseSpans {
            src: Span::new(0, 1),
            tgt: Span::new(2, 3)
        }));
        assert_eq!(got, brute(3, 3, &links, 3));
    }

    #[test]
    fn unaligned_target_edges_extend() {
        let links = vec![(0, 1)];
        let got = extract_phrases(1, 3, &links, 3);
        assert_eq!(got.len(), 4);
        assert_eq!(got, brute(1, 3, &links, 3));
    }

    #[test]
    fn table_probabilities_and_tsv() {
        let corpus = vec![
            (toks("a b"), toks("x y"), vec![(0, 0), (1, 1)]),
            (toks("a c"), toks("x z"), vec![(0, 0), (1, 1)]),
            (toks("a"), toks("w"), vec![(0, 0)]),
        ];
        let table = PhraseTable::from_aligned(&corpus, 2);
        let a = table.lookup(&toks("a"));
        assert_eq!(a.len(), 2);
        let x = a.iter().find(|e| e.tgt == toks("x")).unwrap();
        assert!((x.p_t_given_s - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(x.p_s_given_t, 1.0);
        assert_eq!(x.count, 2);

        let mut by_src: BTreeMap<&[String], f64> = BTreeMap::new();
        for e in &table.entries {
            *by_src.entry(&e.src).or_insert(0.0) += e.p_t_given_s;
        }
        assert!(by_src.values().all(|s| (s - 1.0).abs() < 1e-9));

        let text = table.to_tsv();
        assert!(text.starts_with("a ||| w ||| "));
        let back = PhraseTable::from_tsv(&text).unwrap();
        assert_eq!(back.entries, table.entries);
        assert!(PhraseTable::from_tsv("a ||| b ||| 2 1 1").is_err());
        assert!(PhraseTable::from_tsv("a ||| b").is_err());
    }

    proptest! {
        #[test]
        fn matches_definition(
            src_len in 1usize..7,
            tgt_len in 1usize..7,
            raw in prop::collection::vec((0usize..6, 0usize..6), 0..10),
            max_len in 1usize..7,
        ) {
            let links: Vec<Link> = raw
                .into_iter()
                .filter(|&(i, j)| i < src_len && j < tgt_len)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            prop_assert_eq!(
                extract_phrases(src_len, tgt_len, &links, max_len),
                brute(src_len, tgt_len, &links, max_len)
            );
        }
    }
}
