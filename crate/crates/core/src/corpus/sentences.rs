use std::collections::HashSet;

/// Abbreviations that never end a sentence in the default splitter.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "etc.", "e.g.", "i.e.", "vs.", "St.", "Nr.", "Art.",
    "Abs.", "z.B.", "bzw.", "ca.", "Hr.", "Fr.", "Jan.", "Feb.", "Dec.",
];

pub trait SentenceSplitter: Send + Sync {
    /// Splits `text` into sentences. Output sentences are nonempty and,
    /// joined with single spaces, equal the whitespace-normalized input.
    fn split(&self, text: &str) -> Vec<String>;
}

/// Splits after `.`, `!` or `?` (optionally followed by closing quotes or
/// brackets) when the next word starts with an uppercase letter, unless the
/// word is a listed abbreviation.
#[derive(Debug, Clone)]
pub struct RuleSplitter {
    abbreviations: HashSet<String>,
}

impl Default for RuleSplitter {
    fn default() -> Self {
        RuleSplitter::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl RuleSplitter {
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RuleSplitter {
            abbreviations: abbreviations.into_iter().map(Into::into).collect(),
        }
    }

    pub fn add_abbreviation(&mut self, abbreviation: impl Into<String>) {
        self.abbreviations.insert(abbreviation.into());
    }

    fn ends_sentence(&self, word: &str) -> bool {
        let core = word.trim_end_matches(|c| matches!(c, '"' | '\'' | ')' | ']' | '”' | '’' | '»'));
        if !core.ends_with(['.', '!', '?']) {
            return false;
        }
        !self.abbreviations.contains(core)
    }
}

fn starts_upper(word: &str) -> bool {
    word.chars()
        .find(|c| c.is_alphanumeric())
        .map_or(false, char::is_uppercase)
}

impl SentenceSplitter for RuleSplitter {
    fn split(&self, text: &str) -> Vec<String> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let mut sentences = Vec::new();
        let mut current: Vec<&str> = Vec::new();
        for (i, word) in words.iter().enumerate() {
            current.push(word);
            let boundary = words
                .get(i + 1)
                .map_or(false, |next| self.ends_sentence(word) && starts_upper(next));
            if boundary {
                sentences.push(current.join(" "));
                current.clear();
            }
        }
        if !current.is_empty() {
            sentences.push(current.join(" "));
        }
        sentences
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn split(text: &str) -> Vec<String> {
        RuleSplitter::default().split(text)
    }

    #[test]
    fn splits_on_terminators() {
        assert_eq!(split("I agree. We vote."), ["I agree.", "We vote."]);
        assert_eq!(split("Really? Yes! Fine"), ["Really?", "Yes!", "Fine"]);
    }

    #[test]
    fn abbreviation_guard() {
        assert_eq!(split("Mr. President spoke."), ["Mr. President spoke."]);
        let mut custom = RuleSplitter::with_abbreviations(Vec::<String>::new());
        assert_eq!(
            custom.split("Mr. President spoke."),
            ["Mr.", "President spoke."]
        );
        custom.add_abbreviation("Mr.");
        assert_eq!(
            custom.split("Mr. President spoke."),
            ["Mr. President spoke."]
        );
    }

    #[test]
    fn no_terminator_and_lowercase_continuation() {
        assert_eq!(split("One"), ["One"]);
        assert_eq!(split("the 3. item is fine"), ["the 3. item is fine"]);
        assert!(split("  ").is_empty());
    }

    #[test]
    fn closing_quotes() {
        assert_eq!(
            split("He said \"no.\" Then left."),
            ["He said \"no.\"", "Then left."]
        );
    }

    #[test]
    fn detached_period_in_transcripts() {
        assert_eq!(
            split("Thank you . Next speaker"),
            ["Thank you .", "Next speaker"]
        );
    }

    proptest! {
        #[test]
        fn preserves_text(text in "[A-Za-z .!?]{0,60}") {
            let sentences = split(&text);
            prop_assert!(sentences.iter().all(|s| !s.is_empty()));
            let normalized: Vec<&str> = text.split_whitespace().collect();
            prop_assert_eq!(sentences.join(" "), normalized.join(" "));
        }
    }
}
