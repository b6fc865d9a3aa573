//! Seeded synthetic debate corpora.
//!
//! Dialogues are built from a small parallel German/English phrase lexicon.
//! Interpretations are paraphrased, shortened copies of the translation,
//! split into utterances; the true utterance span of every unit is kept in
//! the dialogue's `gold_spans` meta field. Violations of the cleaning rules
//! can be planted in known numbers.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, AlignedTriple, Dialogue, Provenance, Span};

const SUBJECTS: &[(&str, &str)] = &[
    ("Der Ausschuss", "The committee"),
    ("Die Kommission", "The Commission"),
    ("Der Rat", "The Council"),
    ("Das Parlament", "Parliament"),
    ("Die Berichterstatterin", "The rapporteur"),
    ("Die Regierung", "The government"),
    ("Unsere Fraktion", "Our group"),
    ("Die Präsidentschaft", "The presidency"),
];

const VERBS: &[(&str, &str, &str)] = &[
    // (german frame, english frame, interpreted english frame)
    (
        "{S} muss {O} vorbereiten",
        "{S} must prepare {O}",
        "{S} has to draw up {O}",
    ),
    (
        "{S} hat {O} geprüft",
        "{S} has examined {O}",
        "{S} looked at {O}",
    ),
    (
        "{S} unterstützt {O}",
        "{S} supports {O}",
        "{S} is in favour of {O}",
    ),
    ("{S} lehnt {O} ab", "{S} rejects {O}", "{S} says no to {O}"),
    (
        "{S} wird {O} vorlegen",
        "{S} will present {O}",
        "{S} is going to present {O}",
    ),
    (
        "{S} sollte {O} verbessern",
        "{S} should improve {O}",
        "{S} should make {O} better",
    ),
    (
        "{S} begrüßt {O}",
        "{S} welcomes {O}",
        "{S} is happy with {O}",
    ),
];

const OBJECTS: &[(&str, &str)] = &[
    ("den Bericht über die Fischerei", "the report on fisheries"),
    (
        "das Programm für die Landwirtschaft",
        "the programme for agriculture",
    ),
    (
        "die Richtlinie über den Verkehr",
        "the directive on transport",
    ),
    (
        "den Haushalt für das nächste Jahr",
        "the budget for next year",
    ),
    ("die Strategie für die Energie", "the strategy for energy"),
    ("den Vorschlag zur Migration", "the proposal on migration"),
    (
        "die Verordnung über die Sicherheit",
        "the regulation on safety",
    ),
    ("den Plan für die Regionen", "the plan for the regions"),
    ("das Abkommen mit der Ukraine", "the agreement with Ukraine"),
    (
        "die Reform der Agrarpolitik",
        "the reform of agricultural policy",
    ),
];

const TAILS: &[(&str, &str)] = &[
    ("", ""),
    ("", ""),
    (" und das ist sehr wichtig", " and that is very important"),
    (" in diesem Jahr", " this year"),
    (" nach der langen Debatte", " after the long debate"),
    (" mit großer Mehrheit", " by a large majority"),
    (" so schnell wie möglich", " as soon as possible"),
];

const PARAPHRASES: &[(&str, &str)] = &[
    ("the programme", "the program"),
    ("as soon as possible", "quickly"),
    ("by a large majority", "with a big majority"),
    ("and that is very important", "which is important"),
];

const FILLERS: &[&str] = &["Well", "So", "Now", "Indeed"];

const SHORT_UTTERANCES: &[&str] = &["Thank you.", "Yes.", "Thank you so much.", "Right."];

/// Utterances under the Raw filter's four-word minimum.
const MUTE_UTTERANCES: &[&str] = &["Thank you.", "Yes.", "Right.", "Okay, thanks."];

/// A phrase present in the default signal list, in both languages.
const SIGNAL_UNIT: (&str, &str) = (
    "Die Abstimmung findet morgen um zwölf Uhr statt.",
    "The vote will take place tomorrow at twelve o'clock.",
);

#[derive(Debug, Clone, PartialEq)]
struct Sentence {
    de: String,
    en: String,
    interp: String,
}

fn sentence(rng: &mut ChaCha8Rng, with_tail: bool) -> Sentence {
    let (s_de, s_en) = *SUBJECTS.choose(rng).unwrap();
    let (v_de, v_en, v_int) = *VERBS.choose(rng).unwrap();
    let (o_de, o_en) = *OBJECTS.choose(rng).unwrap();
    let (t_de, t_en) = if with_tail {
        *TAILS.choose(rng).unwrap()
    } else {
        ("", "")
    };
    let fill = |frame: &str, s: &str, o: &str| frame.replace("{S}", s).replace("{O}", o);
    let mut interp = fill(v_int, s_en, o_en) + t_en;
    for (from, to) in PARAPHRASES {
        interp = interp.replace(from, to);
    }
    Sentence {
        de: fill(v_de, s_de, o_de) + t_de + ".",
        en: fill(v_en, s_en, o_en) + t_en + ".",
        interp: interp + ".",
    }
}

/// Drops each token with probability `p`, never leaving fewer than `floor`
/// tokens (or the whole text when it is shorter than that).
fn drop_tokens(rng: &mut ChaCha8Rng, tokens: &[String], p: f64, floor: usize) -> Vec<String> {
    let keep: Vec<bool> = tokens.iter().map(|_| !rng.gen_bool(p)).collect();
    let kept = keep.iter().filter(|&&k| k).count();
    if kept >= floor.min(tokens.len()) {
        tokens
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(t, _)| t.clone())
            .collect()
    } else {
        tokens[..floor.min(tokens.len())].to_vec()
    }
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(String::from).collect()
}

/// Interpreted rendition of one unit as one or two utterances.
fn interpret_unit(rng: &mut ChaCha8Rng, sentences: &[Sentence], dropout: f64) -> Vec<String> {
    let mut tokens = Vec::new();
    for s in sentences {
        tokens.extend(drop_tokens(rng, &words(&s.interp), dropout, 4));
    }
    if rng.gen_bool(0.25) {
        let filler = *FILLERS.choose(rng).unwrap();
        tokens.insert(0, format!("{filler},"));
    }
    if tokens.len() >= 10 && rng.gen_bool(0.5) {
        let cut = rng.gen_range(5..=tokens.len() - 5);
        vec![tokens[..cut].join(" "), tokens[cut..].join(" ")]
    } else {
        vec![tokens.join(" ")]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub min_units: usize,
    pub max_units: usize,
    /// Token dropout applied to interpretations.
    pub dropout: f64,
    /// Chance that a stray short utterance ("Thank you.") is appended.
    pub short_utterance_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 13,
            min_units: 2,
            max_units: 4,
            dropout: 0.1,
            short_utterance_rate: 0.2,
        }
    }
}

fn clean_dialogue(rng: &mut ChaCha8Rng, id: String, cfg: &SynthConfig) -> Dialogue {
    let units = rng.gen_range(cfg.min_units..=cfg.max_units);
    let mut d = Dialogue::new(id);
    let mut spans = Vec::new();
    while spans.len() < units || source_token_count(&d) < CLEAN_MIN_TOKENS {
        let n = rng.gen_range(1..=2);
        let sentences: Vec<Sentence> = (0..n).map(|_| sentence(rng, true)).collect();
        d.source_units
            .push(join(sentences.iter().map(|s| s.de.as_str())));
        d.translation_units
            .push(join(sentences.iter().map(|s| s.en.as_str())));
        let start = d.transcript_utterances.len();
        d.transcript_utterances
            .extend(interpret_unit(rng, &sentences, cfg.dropout));
        spans.push(Span::new(start, d.transcript_utterances.len()));
    }
    if rng.gen_bool(cfg.short_utterance_rate) {
        let short = SHORT_UTTERANCES.choose(rng).unwrap().to_string();
        d.transcript_utterances.push(short);
        let last = spans.last_mut().unwrap();
        last.end += 1;
    }
    d.meta.insert("gold_spans".into(), format_spans(&spans));
    d
}

fn join<'a>(parts: impl Iterator<Item = &'a str>) -> String {
    parts.collect::<Vec<_>>().join(" ")
}

pub fn format_spans(spans: &[Span]) -> String {
    spans
        .iter()
        .map(|s| format!("{}-{}", s.start, s.end))
        .collect::<Vec<_>>()
        .join(",")
}

/// Reads the `gold_spans` meta field written by the generator.
pub fn gold_spans(dialogue: &Dialogue) -> Option<Vec<Span>> {
    dialogue
        .meta
        .get("gold_spans")?
        .split(',')
        .map(|part| {
            let (s, e) = part.split_once('-')?;
            Some(Span::new(s.parse().ok()?, e.parse().ok()?))
        })
        .collect()
}

/// `n` dialogues that pass every default cleaning rule.
pub fn generate_dialogues(n: usize, cfg: &SynthConfig) -> Vec<Dialogue> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..n)
        .map(|i| clean_dialogue(&mut rng, format!("synth-{:04}", i + 1), cfg))
        .collect()
}

/// How many dialogues to corrupt for each rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedViolations {
    pub non_source_language: usize,
    pub min_tokens: usize,
    pub signal_phrase: usize,
    pub sentence_count_mismatch: usize,
    /// Dialogues whose utterances are all too short for the Raw filter.
    pub short_interpretations: usize,
    /// Dialogues holding a signal phrase but long enough to be kept.
    pub long_signal_near_misses: usize,
}

impl Default for PlantedViolations {
    fn default() -> Self {
        PlantedViolations {
            non_source_language: 7,
            min_tokens: 9,
            signal_phrase: 6,
            sentence_count_mismatch: 8,
            short_interpretations: 5,
            long_signal_near_misses: 4,
        }
    }
}

impl PlantedViolations {
    pub fn total(&self) -> usize {
        self.non_source_language
            + self.min_tokens
            + self.signal_phrase
            + self.sentence_count_mismatch
            + self.short_interpretations
            + self.long_signal_near_misses
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    pub dialogues: Vec<Dialogue>,
    /// Planted dialogue ids by the rule expected to remove them.
    pub planted: BTreeMap<String, Vec<String>>,
}

impl PlantedCorpus {
    pub fn expected_count(&self, rule: &str) -> usize {
        self.planted.get(rule).map_or(0, Vec::len)
    }
}

#[derive(Clone, Copy)]
enum Plant {
    Language,
    Short,
    Signal,
    Mismatch,
    Mute,
    NearMiss,
}

/// A corpus of `n` dialogues in which each planted dialogue violates exactly
/// one rule. Untouched dialogues violate none.
pub fn planted_corpus(n: usize, planted: &PlantedViolations, cfg: &SynthConfig) -> PlantedCorpus {
    assert!(
        planted.total() <= n,
        "more planted violations than dialogues"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut plan: Vec<Option<Plant>> = Vec::with_capacity(n);
    for (plant, count) in [
        (Plant::Language, planted.non_source_language),
        (Plant::Short, planted.min_tokens),
        (Plant::Signal, planted.signal_phrase),
        (Plant::Mismatch, planted.sentence_count_mismatch),
        (Plant::Mute, planted.short_interpretations),
        (Plant::NearMiss, planted.long_signal_near_misses),
    ] {
        plan.extend(std::iter::repeat(Some(plant)).take(count));
    }
    plan.resize(n, None);
    plan.shuffle(&mut rng);

    let mut expected: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut dialogues = Vec::with_capacity(n);
    for (i, plant) in plan.into_iter().enumerate() {
        let id = format!("synth-{:04}", i + 1);
        let mut d = clean_dialogue(&mut rng, id.clone(), cfg);
        let rule = match plant {
            None => None,
            Some(Plant::Language) => {
                d.source_units = d.translation_units.clone();
                Some("non_source_language")
            }
            Some(Plant::Short) => {
                let s = sentence(&mut rng, false);
                d.source_units = vec![s.de];
                d.translation_units = vec![s.en];
                d.transcript_utterances = vec![s.interp];
                d.meta.insert("gold_spans".into(), "0-1".into());
                Some("min_tokens")
            }
            Some(Plant::Signal) => {
                d.source_units.push(SIGNAL_UNIT.0.into());
                d.translation_units.push(SIGNAL_UNIT.1.into());
                d.meta.remove("gold_spans");
                Some("signal_phrase")
            }
            Some(Plant::Mismatch) => {
                let last = d.translation_units.pop().unwrap();
                let prev = d.translation_units.last_mut().unwrap();
                prev.push(' ');
                prev.push_str(&last);
                d.meta.remove("gold_spans");
                Some("sentence_count_mismatch")
            }
            Some(Plant::Mute) => {
                let k = d.transcript_utterances.len();
                d.transcript_utterances = (0..k)
                    .map(|_| MUTE_UTTERANCES.choose(&mut rng).unwrap().to_string())
                    .collect();
                d.meta.remove("gold_spans");
                Some("min_interpretation_tokens")
            }
            Some(Plant::NearMiss) => {
                while source_word_count(&d) < 160 {
                    let s = sentence(&mut rng, true);
                    d.source_units.push(s.de);
                    d.translation_units.push(s.en);
                    d.transcript_utterances.push(s.interp);
                }
                d.source_units.push(SIGNAL_UNIT.0.into());
                d.translation_units.push(SIGNAL_UNIT.1.into());
                d.transcript_utterances.push(SIGNAL_UNIT.1.into());
                d.meta.remove("gold_spans");
                None
            }
        };
        if let Some(rule) = rule {
            expected.entry(rule.to_string()).or_default().push(id);
        }
        dialogues.push(d);
    }
    PlantedCorpus {
        dialogues,
        planted: expected,
    }
}

/// Clean dialogues are grown past the default `min_tokens` threshold.
const CLEAN_MIN_TOKENS: usize = 24;

fn source_token_count(d: &Dialogue) -> usize {
    d.source_units
        .iter()
        .map(|u| tokenize(u, false).len())
        .sum()
}

fn source_word_count(d: &Dialogue) -> usize {
    d.source_units
        .iter()
        .map(|u| crate::corpus::word_count(u))
        .sum()
}

/// Triples cut along the generator's gold spans, `n` in total.
pub fn synthetic_triples(n: usize, cfg: &SynthConfig) -> Vec<AlignedTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(n);
    let mut dialogue = 0;
    while out.len() < n {
        dialogue += 1;
        let d = clean_dialogue(&mut rng, format!("synth-{dialogue:05}"), cfg);
        let spans = gold_spans(&d).expect("generator writes spans");
        for (index, span) in spans.into_iter().enumerate() {
            if out.len() == n {
                break;
            }
            out.push(AlignedTriple {
                dialogue_id: d.id.clone(),
                index,
                source: d.source_units[index].clone(),
                translation: d.translation_units[index].clone(),
                interpretation: d.transcript_utterances[span.range()].join(" "),
                span,
                score: 1.0,
                provenance: Provenance::Auto,
                corrected: false,
            });
        }
    }
    out
}

/// Line-aligned, pre-tokenized sources, translations and interpretation
/// references, the latter being the translations under token dropout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFixture {
    pub sources: Vec<String>,
    pub translations: Vec<String>,
    pub interpretations: Vec<String>,
}

pub fn gap_fixture(n: usize, dropout: f64, seed: u64) -> GapFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fx = GapFixture {
        sources: Vec::with_capacity(n),
        translations: Vec::with_capacity(n),
        interpretations: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let s = sentence(&mut rng, true);
        let src = tokenize(&s.de, false).joined();
        let tgt = tokenize(&s.en, false);
        let interp = drop_tokens(&mut rng, &tgt.tokens, dropout, 1);
        fx.sources.push(src);
        fx.translations.push(tgt.joined());
        fx.interpretations.push(interp.join(" "));
    }
    fx
}
