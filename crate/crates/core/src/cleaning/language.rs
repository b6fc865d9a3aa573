use std::collections::HashSet;

use crate::corpus::{is_word, tokenize};

/// German function words and frequent parliamentary forms of address.
pub const GERMAN_WORDS: &[&str] = &[
    "der",
    "die",
    "das",
    "und",
    "in",
    "zu",
    "den",
    "von",
    "nicht",
    "mit",
    "es",
    "sich",
    "des",
    "auf",
    "für",
    "ist",
    "im",
    "dem",
    "ein",
    "eine",
    "einen",
    "einer",
    "eines",
    "als",
    "auch",
    "an",
    "werden",
    "aus",
    "er",
    "hat",
    "dass",
    "daß",
    "sie",
    "nach",
    "wird",
    "bei",
    "um",
    "noch",
    "wie",
    "über",
    "so",
    "zum",
    "war",
    "haben",
    "nur",
    "oder",
    "aber",
    "vor",
    "zur",
    "bis",
    "mehr",
    "durch",
    "man",
    "sein",
    "wurde",
    "sei",
    "wir",
    "ich",
    "ihr",
    "uns",
    "unsere",
    "unser",
    "wenn",
    "kann",
    "können",
    "diese",
    "dieser",
    "dieses",
    "sehr",
    "hier",
    "heute",
    "herr",
    "frau",
    "präsident",
    "präsidentin",
    "kolleginnen",
    "kollegen",
    "liebe",
    "meine",
    "damen",
    "herren",
    "danke",
    "bitte",
    "ja",
    "nein",
    "was",
    "weil",
    "denn",
    "doch",
    "schon",
    "muss",
    "müssen",
    "soll",
    "sollte",
    "gibt",
    "gegen",
    "ohne",
    "unter",
    "zwischen",
];

/// English function words and frequent parliamentary forms of address.
pub const ENGLISH_WORDS: &[&str] = &[
    "the",
    "of",
    "and",
    "to",
    "in",
    "a",
    "is",
    "that",
    "for",
    "it",
    "as",
    "was",
    "with",
    "be",
    "by",
    "on",
    "not",
    "he",
    "this",
    "are",
    "or",
    "his",
    "from",
    "at",
    "which",
    "but",
    "have",
    "an",
    "they",
    "you",
    "were",
    "her",
    "she",
    "there",
    "been",
    "one",
    "all",
    "we",
    "their",
    "has",
    "would",
    "will",
    "can",
    "if",
    "more",
    "when",
    "so",
    "what",
    "no",
    "out",
    "up",
    "who",
    "about",
    "into",
    "them",
    "than",
    "other",
    "some",
    "these",
    "its",
    "also",
    "our",
    "should",
    "must",
    "mr",
    "mrs",
    "madam",
    "president",
    "ladies",
    "gentlemen",
    "thank",
    "colleagues",
    "commissioner",
    "i",
    "my",
    "us",
    "do",
    "very",
    "because",
    "why",
    "how",
    "here",
    "today",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub language: String,
    /// Hit-rate margin between the best and the runner-up language.
    pub confidence: f64,
}

impl Detection {
    fn unknown() -> Self {
        Detection {
            language: "unknown".to_string(),
            confidence: 0.0,
        }
    }
}

/// Stopword hit-rate language identifier.
#[derive(Debug, Clone)]
pub struct LanguageDetector {
    languages: Vec<(String, HashSet<String>)>,
}

impl Default for LanguageDetector {
    fn default() -> Self {
        let mut detector = LanguageDetector {
            languages: Vec::new(),
        };
        detector.add_language("de", GERMAN_WORDS.iter().copied());
        detector.add_language("en", ENGLISH_WORDS.iter().copied());
        detector
    }
}

impl LanguageDetector {
    pub fn add_language<I, S>(&mut self, tag: impl Into<String>, words: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.languages
            .push((tag.into(), words.into_iter().map(Into::into).collect()));
    }

    pub fn detect(&self, text: &str) -> Detection {
        let words: Vec<String> = tokenize(text, true)
            .tokens
            .into_iter()
            .filter(|t| is_word(t))
            .collect();
        if words.is_empty() {
            return Detection::unknown();
        }
        let rates: Vec<f64> = self
            .languages
            .iter()
            .map(|(_, list)| {
                let hits = words.iter().filter(|w| list.contains(w.as_str())).count();
                hits as f64 / words.len() as f64
            })
            .collect();
        let mut best = 0;
        for (i, rate) in rates.iter().enumerate() {
            if *rate > rates[best] {
                best = i;
            }
        }
        if rates[best] == 0.0 {
            return Detection::unknown();
        }
        let runner_up = rates
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != best)
            .map(|(_, r)| *r)
            .fold(0.0, f64::max);
        Detection {
            language: self.languages[best].0.clone(),
            confidence: rates[best] - runner_up,
        }
    }
}

pub fn detect_language(text: &str) -> Detection {
    LanguageDetector::default().detect(text)
}
