use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Casing {
    Preserved,
    Lowercased,
}

/// Tokenized text. Tokens are never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub casing: Casing,
}

impl TokenSeq {
    pub fn from_tokens<I, S>(tokens: I, casing: Casing) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        TokenSeq {
            tokens: tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
            casing,
        }
    }

    /// Splits on whitespace only, for pretokenized input.
    pub fn whitespace(text: &str) -> Self {
        TokenSeq::from_tokens(text.split_whitespace(), Casing::Preserved)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.tokens.iter()
    }
}

impl AsRef<[String]> for TokenSeq {
    fn as_ref(&self) -> &[String] {
        &self.tokens
    }
}

/// NFC normalization applied to every ingested text.
pub fn normalize(text: &str) -> String {
    text.nfc().collect()
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Whitespace tokenization with leading and trailing punctuation detached,
/// one token per punctuation character. Word-internal punctuation
/// ("I've", "U.S") stays attached.
pub fn tokenize(text: &str, lowercase: bool) -> TokenSeq {
    let text = normalize(text);
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let lead = chars.iter().take_while(|c| is_punct(**c)).count();
        if lead == chars.len() {
            tokens.extend(chars.iter().map(|c| c.to_string()));
            continue;
        }
        let trail = chars.iter().rev().take_while(|c| is_punct(**c)).count();
        tokens.extend(chars[..lead].iter().map(|c| c.to_string()));
        tokens.push(chars[lead..chars.len() - trail].iter().collect());
        tokens.extend(chars[chars.len() - trail..].iter().map(|c| c.to_string()));
    }
    if lowercase {
        for t in &mut tokens {
            *t = t.to_lowercase();
        }
    }
    TokenSeq {
        tokens,
        casing: if lowercase {
            Casing::Lowercased
        } else {
            Casing::Preserved
        },
    }
}

/// A word is a token with at least one letter.
pub fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphabetic)
}

pub fn word_count(text: &str) -> usize {
    tokenize(text, false).iter().filter(|t| is_word(t)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(text: &str) -> Vec<String> {
        tokenize(text, false).tokens
    }

    #[test]
    fn detaches_punctuation() {
        assert_eq!(
            toks("Mr. President, thank you."),
            ["Mr", ".", "President", ",", "thank", "you", "."]
        );
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("", false).is_empty());
        assert!(tokenize("   \t ", true).is_empty());
    }

    #[test]
    fn lowercase_rule() {
        let seq = tokenize("das Haus", true);
        assert_eq!(seq.tokens, ["das", "haus"]);
        assert_eq!(seq.casing, Casing::Lowercased);
    }

    #[test]
    fn internal_punctuation_kept() {
        assert_eq!(
            toks("I've \"won\"..."),
            ["I've", "\"", "won", "\"", ".", ".", "."]
        );
        assert_eq!(toks("(U.S.)"), ["(", "U.S", ".", ")"]);
    }

    #[test]
    fn nfc_applied() {
        // "e" + combining acute vs precomposed
        assert_eq!(toks("caf\u{0065}\u{0301}"), ["caf\u{e9}"]);
    }

    #[test]
    fn words_ignore_punctuation() {
        assert_eq!(word_count("Thank you ."), 2);
        assert_eq!(word_count("2010 , 2011"), 0);
    }

    proptest! {
        #[test]
        fn idempotent_on_joined_output(text in "[a-zA-Z .,!?'\"()-]{0,40}") {
            let first = tokenize(&text, false);
            let second = tokenize(&first.joined(), false);
            prop_assert_eq!(&first, &second);
            prop_assert!(first.iter().all(|t| !t.is_empty()));
        }
    }
}
