//! Acceptance gate: one PASS/FAIL line per criterion.

mod common;

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simulcorpus::aligner::{
    brute_force_segmentation, constrained_segmentation, Segmentation, SegmentationProblem,
};
use simulcorpus::cleaning::{
    default_dialogue_rules, filter_dialogues, filter_raw_interpretations, RAW_FILTER_RULE,
};
use simulcorpus::metrics::{
    average_lagging, average_proportion, corpus_bleu, BleuConfig, BleuTokenizer, Smoothing,
};
use simulcorpus::pipeline::run_pipeline;
use simulcorpus::similarity::{Scorer, SimilarityError};
use simulcorpus::synth::{
    gap_fixture, planted_corpus, synthetic_triples, PlantedViolations, SynthConfig,
};
use simulcorpus::t2i::{
    decode_scored, extract_phrases, train_model1, train_t2i, DecoderConfig, Link, ModelBundle,
    NGramLM, PhraseTable, TrainConfig, BOS, EOS,
};
use simulcorpus::waitk::{run_eval, simulate_waitk, EchoGenerator, TableGenerator, WaitKConfig};
use simulcorpus::Span;

const DP_INSTANCES: usize = 1000;
const DP_MAX_N: usize = 8;
const DP_MAX_K: usize = 4;
const DP_SCORE_TOL: f64 = 1e-9;
const DP_TIME_LIMIT: Duration = Duration::from_secs(5);
const GROWTH_LIMIT: f64 = 4.1;
const GROWTH_SIZES: [usize; 3] = [20, 40, 80];
const LATENCY_TOL: f64 = 1e-9;
const BLEU_HAND_TOL: f64 = 0.01;
const BLEU_PERM_TOL: f64 = 1e-9;
const EM_TOL: f64 = 1e-9;
const EM_TOY_MIN: f64 = 0.9;
const DECODER_TOL: f64 = 1e-9;
const PIPELINE_TIME_LIMIT: Duration = Duration::from_secs(60);

type Outcome = Result<String, String>;

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

/// Deterministic pseudo-random similarity; `levels > 0` quantizes it to
/// provoke ties.
struct HashScorer {
    salt: u64,
    levels: u64,
    calls: AtomicUsize,
}

impl HashScorer {
    fn new(salt: u64, levels: u64) -> Self {
        HashScorer {
            salt,
            levels,
            calls: AtomicUsize::new(0),
        }
    }
}

impl Scorer for HashScorer {
    fn score(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let mut h = DefaultHasher::new();
        (self.salt, a, b).hash(&mut h);
        let x = h.finish();
        Ok(if self.levels > 0 {
            (x % self.levels) as f64 / self.levels as f64
        } else {
            (x >> 11) as f64 / (1u64 << 53) as f64
        })
    }
}

fn problem_texts(k: usize, n: usize, tag: usize) -> (Vec<String>, Vec<String>) {
    let refs = (0..k).map(|r| format!("ref {tag} {r}")).collect();
    let utts = (0..n).map(|u| format!("utt {tag} {u}")).collect();
    (refs, utts)
}

/// Best score over every split of `n` utterances into `k` contiguous
/// non-empty chunks, by recursion over the first chunk.
fn enumerate_best(k: usize, n: usize, d: &dyn Fn(usize, usize, usize) -> f64) -> f64 {
    fn go(
        r: usize,
        start: usize,
        k: usize,
        n: usize,
        d: &dyn Fn(usize, usize, usize) -> f64,
    ) -> f64 {
        if r == k - 1 {
            return d(r, start, n);
        }
        let mut best = f64::NEG_INFINITY;
        for end in start + 1..=n - (k - 1 - r) {
            best = best.max(d(r, start, end) + go(r + 1, end, k, n, d));
        }
        best
    }
    go(0, 0, k, n, d)
}

fn valid_chain(spans: &[Span], n: usize) -> bool {
    let mut at = 0;
    for s in spans {
        if s.start != at || s.end <= s.start {
            return false;
        }
        at = s.end;
    }
    at == n
}

fn dp_matches_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let started = Instant::now();
    let mut mismatches = Vec::new();
    for inst in 0..DP_INSTANCES {
        let n = rng.gen_range(1..=DP_MAX_N);
        let k = rng.gen_range(1..=DP_MAX_K.min(n));
        let levels = if inst % 4 == 0 { 4 } else { 0 };
        let scorer = HashScorer::new(rng.gen(), levels);
        let (refs, utts) = problem_texts(k, n, inst);
        let problem = SegmentationProblem::new(&refs, &utts, &scorer);
        let dp = constrained_segmentation(&problem).map_err(|e| e.to_string())?;
        let bf: Segmentation = brute_force_segmentation(&problem).map_err(|e| e.to_string())?;
        let oracle = enumerate_best(k, n, &|r, s, e| {
            scorer.score(&refs[r], &utts[s..e].join(" ")).unwrap()
        });
        let seg = &dp.segmentation;
        let ok = seg.spans == bf.spans
            && (seg.total_score - bf.total_score).abs() <= DP_SCORE_TOL
            && (seg.total_score - oracle).abs() <= DP_SCORE_TOL
            && valid_chain(&seg.spans, n);
        if !ok {
            mismatches.push(format!("instance {inst} (K={k}, N={n})"));
        }
    }
    let elapsed = started.elapsed();
    check(
        mismatches.is_empty() && elapsed < DP_TIME_LIMIT,
        format!(
            "{DP_INSTANCES} instances agree, {:.2}s",
            elapsed.as_secs_f64()
        ),
        format!(
            "{} mismatches {:?}, {:.2}s",
            mismatches.len(),
            mismatches.iter().take(3).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

fn evaluations(k: usize, n: usize) -> Result<(usize, usize), String> {
    let scorer = HashScorer::new(7, 0);
    let (refs, utts) = problem_texts(k, n, n);
    let problem = SegmentationProblem::new(&refs, &utts, &scorer);
    let outcome = constrained_segmentation(&problem).map_err(|e| e.to_string())?;
    Ok((outcome.evaluations, scorer.calls.load(Ordering::Relaxed)))
}

fn evaluation_growth() -> Outcome {
    let mut over_bound = Vec::new();
    for k in 1..=6 {
        for n in k..=40 {
            let (reported, counted) = evaluations(k, n)?;
            if reported > k * n * (n + 1) / 2 || counted != reported {
                over_bound.push((k, n, reported, counted));
            }
        }
    }
    let mut ratios = Vec::new();
    for &n in &GROWTH_SIZES {
        let (small, _) = evaluations(3, n)?;
        let (large, _) = evaluations(3, 2 * n)?;
        ratios.push(large as f64 / small as f64);
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    check(
        over_bound.is_empty() && worst <= GROWTH_LIMIT,
        format!("within K*N(N+1)/2 for K<=6, N<=40; doubling ratios {ratios:.3?}"),
        format!("bound violations {over_bound:?}; doubling ratios {ratios:.3?}"),
    )
}

/// AP and AL of the ideal wait-k schedule computed from their definitions.
fn waitk_oracle(k: usize, x: usize, y: usize) -> (f64, f64) {
    let g: Vec<usize> = (1..=y).map(|t| (t + k - 1).min(x)).collect();
    let ap = g.iter().sum::<usize>() as f64 / (x * y) as f64;
    let tau = g.iter().position(|&gi| gi == x).map_or(y, |i| i + 1);
    let gamma = y as f64 / x as f64;
    let al = (0..tau)
        .map(|i| g[i] as f64 - i as f64 / gamma)
        .sum::<f64>()
        / tau as f64;
    (ap, al)
}

fn waitk_latency() -> Outcome {
    let words = |n: usize| (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>();
    let sim = simulate_waitk(&words(10), &WaitKConfig::new(3), &EchoGenerator)
        .map_err(|e| e.to_string())?;
    let ap = average_proportion(&sim.schedule).map_err(|e| e.to_string())?;
    let al = average_lagging(&sim.schedule).map_err(|e| e.to_string())?;
    let (oap, oal) = waitk_oracle(3, 10, 10);
    let mut bad = Vec::new();
    if sim.hypothesis != words(10) {
        bad.push("echo output differs from source".to_string());
    }
    if (ap - oap).abs() > LATENCY_TOL || (oap - 0.72).abs() > LATENCY_TOL {
        bad.push(format!("AP {ap} vs oracle {oap}"));
    }
    if (al - oal).abs() > LATENCY_TOL || (oal - 3.0).abs() > LATENCY_TOL {
        bad.push(format!("AL {al} vs oracle {oal}"));
    }
    for k in 1..=9 {
        for n in [10, 17, 25] {
            let sim = simulate_waitk(&words(n), &WaitKConfig::new(k), &EchoGenerator)
                .map_err(|e| e.to_string())?;
            let al = average_lagging(&sim.schedule).map_err(|e| e.to_string())?;
            if (al - k as f64).abs() > LATENCY_TOL {
                bad.push(format!("k={k} n={n}: AL {al}"));
            }
        }
    }
    check(
        bad.is_empty(),
        format!("AP {ap:.4}, AL {al:.4}; AL = k for k in 1..=9"),
        bad.join("; "),
    )
}

fn random_corpus(rng: &mut ChaCha8Rng, lines: usize) -> Vec<String> {
    const VOCAB: [&str; 12] = [
        "the", "a", "vote", "council", "we", "will", "report", "on", "today", "is", "this", "house",
    ];
    (0..lines)
        .map(|_| {
            let len = rng.gen_range(1..=12);
            (0..len)
                .map(|_| *VOCAB.choose(rng).unwrap())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn bleu_checks() -> Outcome {
    let cfg = BleuConfig {
        tokenizer: BleuTokenizer::Pretokenized,
        ..BleuConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = Vec::new();
    for _ in 0..20 {
        let corpus: Vec<String> = random_corpus(&mut rng, 30)
            .into_iter()
            .map(|l| format!("{l} end of line"))
            .collect();
        let s = corpus_bleu(&corpus, &corpus, &cfg)
            .map_err(|e| e.to_string())?
            .score;
        if (s - 100.0).abs() > BLEU_PERM_TOL {
            bad.push(format!("identity gives {s}"));
        }
        let hyps = random_corpus(&mut rng, 30);
        let base = corpus_bleu(&hyps, &corpus, &cfg)
            .map_err(|e| e.to_string())?
            .score;
        let mut order: Vec<usize> = (0..hyps.len()).collect();
        order.shuffle(&mut rng);
        let h: Vec<&String> = order.iter().map(|&i| &hyps[i]).collect();
        let r: Vec<&String> = order.iter().map(|&i| &corpus[i]).collect();
        let permuted = corpus_bleu(&h, &r, &cfg).map_err(|e| e.to_string())?.score;
        if (base - permuted).abs() > BLEU_PERM_TOL {
            bad.push(format!("permutation moved {base} to {permuted}"));
        }
    }
    let none = BleuConfig {
        smoothing: Smoothing::None,
        ..cfg
    };
    let hand = corpus_bleu(&["the cat sat on"], &["the cat sat on the mat"], &none)
        .map_err(|e| e.to_string())?
        .score;
    // all n-gram precisions are 1, so only the brevity penalty remains
    let oracle = 100.0 * (1.0f64 - 6.0 / 4.0).exp();
    if (hand - oracle).abs() > BLEU_PERM_TOL || (hand - 60.65).abs() > BLEU_HAND_TOL {
        bad.push(format!("hand case {hand} vs {oracle}"));
    }
    check(
        bad.is_empty(),
        format!("identity 100, permutation invariant, hand case {hand:.4}"),
        bad.join("; "),
    )
}

/// Model 1 EM written out directly: uniform start, NULL on the source side.
fn model1_oracle(
    pairs: &[(Vec<String>, Vec<String>)],
    iterations: usize,
) -> HashMap<(String, String), f64> {
    let mut t: HashMap<(String, String), f64> = HashMap::new();
    let uniform = 1.0;
    for _ in 0..iterations {
        let mut count: HashMap<(String, String), f64> = HashMap::new();
        let mut total: HashMap<String, f64> = HashMap::new();
        for (f, e) in pairs {
            let mut src = vec!["NULL".to_string()];
            src.extend(f.iter().cloned());
            for ew in e {
                let z: f64 = src
                    .iter()
                    .map(|fw| *t.get(&(ew.clone(), fw.clone())).unwrap_or(&uniform))
                    .sum();
                for fw in &src {
                    let p = *t.get(&(ew.clone(), fw.clone())).unwrap_or(&uniform) / z;
                    *count.entry((ew.clone(), fw.clone())).or_insert(0.0) += p;
                    *total.entry(fw.clone()).or_insert(0.0) += p;
                }
            }
        }
        t = count
            .into_iter()
            .map(|((e, f), c)| {
                let z = total[&f];
                ((e, f), c / z)
            })
            .collect();
    }
    t
}

fn em_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let src_vocab = ["das", "haus", "buch", "ein", "klein", "ist"];
    let tgt_vocab = ["the", "house", "book", "a", "small", "is"];
    let mut decreases = Vec::new();
    for c in 0..100 {
        let pairs: Vec<(Vec<String>, Vec<String>)> = (0..rng.gen_range(3..=12))
            .map(|_| {
                let f = (0..rng.gen_range(1..=5))
                    .map(|_| src_vocab.choose(&mut rng).unwrap().to_string())
                    .collect();
                let e = (0..rng.gen_range(1..=5))
                    .map(|_| tgt_vocab.choose(&mut rng).unwrap().to_string())
                    .collect();
                (f, e)
            })
            .collect();
        let model = train_model1(&pairs, 20).map_err(|e| e.to_string())?;
        if model
            .log_likelihood
            .windows(2)
            .any(|w| w[1] < w[0] - EM_TOL * w[0].abs().max(1.0))
        {
            decreases.push(c);
        }
    }
    let toy: Vec<(Vec<String>, Vec<String>)> = [
        ("das Haus", "the house"),
        ("das Buch", "the book"),
        ("ein Buch", "a book"),
    ]
    .iter()
    .map(|(f, e)| (toks(f), toks(e)))
    .collect();
    let model = train_model1(&toy, 50).map_err(|e| e.to_string())?;
    let p = model.table.prob("the", "das");
    let oracle = model1_oracle(&toy, 50);
    let mut drift: f64 = 0.0;
    for ((e, f), q) in &oracle {
        let f = if f == "NULL" {
            simulcorpus::t2i::NULL
        } else {
            f.as_str()
        };
        drift = drift.max((model.table.prob(e, f) - q).abs());
    }
    check(
        decreases.is_empty() && p > EM_TOY_MIN && drift <= EM_TOL,
        format!("likelihood monotone on 100 corpora; t(the|das) = {p:.4}, max drift {drift:.1e}"),
        format!("decreasing corpora {decreases:?}; t(the|das) = {p:.4}; drift {drift:.1e}"),
    )
}

/// Every consistent span pair, by exhaustive enumeration.
fn phrases_oracle(
    src_len: usize,
    tgt_len: usize,
    links: &[Link],
    max_len: usize,
) -> BTreeSet<(Span, Span)> {
    let mut out = BTreeSet::new();
    for s1 in 0..src_len {
        for s2 in s1 + 1..=src_len.min(s1 + max_len) {
            for t1 in 0..tgt_len {
                for t2 in t1 + 1..=tgt_len.min(t1 + max_len) {
                    let src_in = |i: usize| (s1..s2).contains(&i);
                    let tgt_in = |j: usize| (t1..t2).contains(&j);
                    let any = links.iter().any(|&(i, j)| src_in(i) && tgt_in(j));
                    let leak = links.iter().any(|&(i, j)| src_in(i) != tgt_in(j));
                    if any && !leak {
                        out.insert((Span::new(s1, s2), Span::new(t1, t2)));
                    }
                }
            }
        }
    }
    out
}

fn phrase_extraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut bad = Vec::new();
    let mut compared = 0;
    for p in 0..50 {
        let (sl, tl) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let density = rng.gen_range(0.1..0.6);
        let links: Vec<Link> = (0..sl)
            .flat_map(|i| (0..tl).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(density))
            .collect();
        for max_len in 1..=6 {
            let got: BTreeSet<(Span, Span)> = extract_phrases(sl, tl, &links, max_len)
                .into_iter()
                .map(|ps| (ps.src, ps.tgt))
                .collect();
            compared += 1;
            if got != phrases_oracle(sl, tl, &links, max_len) {
                bad.push(format!("pair {p} max_len {max_len}"));
            }
        }
    }
    check(
        bad.is_empty(),
        format!("{compared} extractions match the enumeration"),
        format!(
            "{} mismatches: {:?}",
            bad.len(),
            bad.iter().take(5).collect::<Vec<_>>()
        ),
    )
}

struct Opt {
    s: usize,
    e: usize,
    tgt: Vec<String>,
    tm: f64,
    tm_inv: f64,
}

fn oracle_options(src: &[String], table: &PhraseTable, per_span: usize) -> Vec<Opt> {
    let mut out = Vec::new();
    for s in 0..src.len() {
        for e in s + 1..=src.len() {
            let mut entries: Vec<_> = table.lookup(&src[s..e]).iter().collect();
            entries.sort_by(|a, b| {
                b.p_t_given_s
                    .total_cmp(&a.p_t_given_s)
                    .then_with(|| a.tgt.cmp(&b.tgt))
            });
            entries.truncate(per_span);
            if entries.is_empty() && e == s + 1 {
                out.push(Opt {
                    s,
                    e,
                    tgt: vec![src[s].clone()],
                    tm: 0.0,
                    tm_inv: 0.0,
                });
            }
            for en in entries {
                out.push(Opt {
                    s,
                    e,
                    tgt: en.tgt.clone(),
                    tm: en.p_t_given_s.ln(),
                    tm_inv: en.p_s_given_t.ln(),
                });
            }
        }
    }
    out
}

/// Best model score over every derivation within the distortion limit.
fn exhaustive_decode(
    src: &[String],
    table: &PhraseTable,
    lm: &NGramLM,
    cfg: &DecoderConfig,
) -> Option<f64> {
    let opts = oracle_options(src, table, cfg.options_per_span);
    let w = cfg.weights;
    let mut best: Option<f64> = None;
    let mut chosen: Vec<usize> = Vec::new();
    fn walk(
        opts: &[Opt],
        covered: &mut Vec<bool>,
        last_end: usize,
        chosen: &mut Vec<usize>,
        limit: usize,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if covered.iter().all(|&c| c) {
            visit(chosen);
            return;
        }
        for (i, o) in opts.iter().enumerate() {
            if o.s.abs_diff(last_end) > limit || covered[o.s..o.e].iter().any(|&c| c) {
                continue;
            }
            covered[o.s..o.e].iter_mut().for_each(|c| *c = true);
            chosen.push(i);
            walk(opts, covered, o.e, chosen, limit, visit);
            chosen.pop();
            covered[o.s..o.e].iter_mut().for_each(|c| *c = false);
        }
    }
    let mut visit = |seq: &[usize]| {
        let mut out: Vec<String> = Vec::new();
        let (mut tm, mut tm_inv) = (0.0, 0.0);
        for &i in seq {
            tm += opts[i].tm;
            tm_inv += opts[i].tm_inv;
            out.extend(opts[i].tgt.iter().cloned());
        }
        let mut history = vec![BOS.to_string()];
        let mut lm_ln = 0.0;
        for word in out.iter().map(String::as_str).chain([EOS]) {
            lm_ln += lm.score(&history, word) * std::f64::consts::LN_10;
            history.push(word.to_string());
        }
        let score = w.tm * tm + w.tm_inv * tm_inv + w.lm * lm_ln + w.len * out.len() as f64;
        if best.map_or(true, |b| score > b) {
            best = Some(score);
        }
    };
    walk(
        &opts,
        &mut vec![false; src.len()],
        0,
        &mut chosen,
        cfg.distortion_limit,
        &mut visit,
    );
    best
}

fn decoder_checks() -> Outcome {
    let fx = gap_fixture(100, 0.2, 21);
    let words: Vec<&str> = fx
        .translations
        .iter()
        .flat_map(|l| l.split_whitespace())
        .collect();
    let identity = ModelBundle::identity(words);
    let mut bad = Vec::new();
    for line in &fx.translations {
        let out = identity.rewrite(line).map_err(|e| e.to_string())?;
        if &out != line {
            bad.push(format!("identity changed {line:?} into {out:?}"));
        }
    }

    let pairs: Vec<(String, String)> = synthetic_triples(300, &SynthConfig::default())
        .into_iter()
        .map(|t| (t.translation, t.interpretation))
        .collect();
    let bundle = train_t2i(&pairs, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (i, (translation, _)) in pairs.iter().enumerate().take(60) {
        let all = toks(translation);
        let len = 1 + i % 5;
        let src = &all[..all.len().min(len)];
        for limit in [0, 2] {
            let cfg = DecoderConfig {
                beam: 1_000_000,
                distortion_limit: limit,
                options_per_span: 3,
                ..bundle.decoder
            };
            let got = decode_scored(src, &bundle.phrase_table, &bundle.lm, &cfg)
                .map_err(|e| e.to_string())?;
            let Some(oracle) = exhaustive_decode(src, &bundle.phrase_table, &bundle.lm, &cfg)
            else {
                bad.push(format!("no derivation for {src:?}"));
                continue;
            };
            compared += 1;
            if (got.score - oracle).abs() > DECODER_TOL {
                bad.push(format!("{src:?} limit {limit}: {} vs {oracle}", got.score));
            }
        }
    }
    check(
        bad.is_empty(),
        format!("identity on 100 sentences; {compared} decodes match exhaustive search"),
        format!(
            "{} failures: {:?}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn pipeline_determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut times = Vec::new();
    for dir in [&a, &b] {
        let started = Instant::now();
        run_pipeline(&common::fixture_config(dir.path()), None).map_err(|e| e.to_string())?;
        times.push(started.elapsed());
    }
    let (sa, sb) = (common::snapshot(a.path()), common::snapshot(b.path()));
    let differing: Vec<&String> = sa.keys().filter(|k| sa.get(*k) != sb.get(*k)).collect();
    let slowest = times.iter().max().unwrap();
    check(
        differing.is_empty() && sa.len() == sb.len() && *slowest < PIPELINE_TIME_LIMIT,
        format!(
            "{} files byte-identical across runs, slowest run {:.1}s",
            sa.len(),
            slowest.as_secs_f64()
        ),
        format!(
            "differing {differing:?}, slowest run {:.1}s",
            slowest.as_secs_f64()
        ),
    )
}

fn interpretation_gap() -> Outcome {
    let fx = gap_fixture(300, 0.2, 17);
    let generator = TableGenerator::from_pairs(
        "translation-table",
        fx.sources
            .iter()
            .zip(&fx.translations)
            .map(|(s, t)| (s.clone(), t.clone())),
    );
    let (report, _) = run_eval(
        &fx.sources,
        &fx.translations,
        &fx.interpretations,
        &WaitKConfig::new(3),
        &generator,
        &BleuConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    check(
        report.gap > 0.0,
        format!(
            "BLEU {:.2} vs translations, {:.2} vs interpretations, gap {:.2}",
            report.bleu_translation, report.bleu_interpretation, report.gap
        ),
        format!("gap {:.2} is not positive", report.gap),
    )
}

fn filter_accounting() -> Outcome {
    let corpus = planted_corpus(100, &PlantedViolations::default(), &SynthConfig::default());
    let filtered = filter_dialogues(&corpus.dialogues, &default_dialogue_rules())
        .map_err(|e| e.to_string())?;
    let raw = filter_raw_interpretations(&filtered.kept, 4);
    let mut counts: BTreeMap<String, usize> = filtered.report.counts.clone();
    counts.insert(RAW_FILTER_RULE.into(), raw.report.counts[RAW_FILTER_RULE]);
    let wrong: Vec<String> = counts
        .iter()
        .filter(|(rule, &c)| c != corpus.expected_count(rule))
        .map(|(rule, c)| format!("{rule}: {c} vs {}", corpus.expected_count(rule)))
        .collect();
    let planted_rules: Vec<&String> = corpus
        .planted
        .keys()
        .filter(|r| !counts.contains_key(*r))
        .collect();
    check(
        wrong.is_empty() && planted_rules.is_empty(),
        format!("per-rule counts {counts:?}, {} kept", raw.kept.len()),
        format!("wrong counts {wrong:?}; unreported rules {planted_rules:?}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("segmentation DP equals brute force", dp_matches_brute_force),
        ("segmentation evaluations are quadratic", evaluation_growth),
        ("wait-k latency on the ideal schedule", waitk_latency),
        ("corpus BLEU", bleu_checks),
        ("Model 1 EM", em_checks),
        ("phrase extraction", phrase_extraction),
        ("stack decoder", decoder_checks),
        ("pipeline determinism and runtime", pipeline_determinism),
        ("translation/interpretation BLEU gap", interpretation_gap),
        ("cleaning filter accounting", filter_accounting),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
