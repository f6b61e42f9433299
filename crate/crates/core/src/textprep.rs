//! Tweet normalization and tokenization.
//!
//! The modeling path does no stemming and no stop-word removal.

use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Label, LabeledDocument};

/// A lowercase alphanumeric term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    /// Returns `None` unless `surface` is non-empty, has no whitespace or
    /// uppercase characters, and contains a letter or digit.
    pub fn new(surface: impl Into<String>) -> Option<Token> {
        let s = surface.into();
        let valid = !s.is_empty()
            && !s.chars().any(|c| c.is_whitespace() || c.is_uppercase())
            && s.chars().any(char::is_alphanumeric);
        valid.then_some(Token(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDocument {
    pub id: u64,
    pub tokens: Vec<Token>,
    pub label: Label,
}

impl TokenizedDocument {
    pub fn from_text(id: u64, text: &str, label: Label) -> Self {
        TokenizedDocument {
            id,
            tokens: tokenize(&normalize(text)),
            label,
        }
    }

    /// Builds a document from pre-split words; words that are not valid tokens are dropped.
    pub fn from_words<S: AsRef<str>>(id: u64, words: &[S], label: Label) -> Self {
        TokenizedDocument {
            id,
            tokens: words
                .iter()
                .filter_map(|w| Token::new(w.as_ref()))
                .collect(),
            label,
        }
    }
}

impl From<&LabeledDocument> for TokenizedDocument {
    fn from(doc: &LabeledDocument) -> Self {
        TokenizedDocument::from_text(doc.id, &doc.text, doc.label)
    }
}

pub fn prepare(docs: &[LabeledDocument]) -> Vec<TokenizedDocument> {
    docs.iter().map(TokenizedDocument::from).collect()
}

struct Patterns {
    mention: Regex,
    url: Regex,
    hashtag: Regex,
}

fn patterns() -> &'static Patterns {
    static PATTERNS: OnceLock<Patterns> = OnceLock::new();
    PATTERNS.get_or_init(|| Patterns {
        mention: Regex::new(r"@\w+").unwrap(),
        // a URL takes one trailing whitespace character with it
        url: Regex::new(r"[a-z][a-z0-9+.\-]*://\S*\s?").unwrap(),
        hashtag: Regex::new(r"#+(\w)").unwrap(),
    })
}

fn normalize_once(text: &str) -> String {
    let lowered: String = text.to_lowercase().nfc().collect();
    let cleaned: String = lowered
        .chars()
        .filter_map(|c| match c {
            '\t' | '\n' | '\r' => Some(' '),
            c if c.is_control() => None,
            c => Some(c),
        })
        .collect();
    let p = patterns();
    let no_mentions = p.mention.replace_all(&cleaned, "");
    let no_urls = p.url.replace_all(&no_mentions, "");
    p.hashtag.replace_all(&no_urls, "$1").into_owned()
}

/// Lowercases, NFC-normalizes, strips control characters (tab, newline and
/// carriage return become spaces), removes `@mentions` and `scheme://` URLs,
/// and unwraps `#hashtags` to their word.
///
/// The rules are applied until the text stops changing, so the function is
/// idempotent even when one removal exposes another pattern.
pub fn normalize(text: &str) -> String {
    let mut current = normalize_once(text);
    loop {
        let next = normalize_once(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Splits on runs of non-alphanumeric characters. Apostrophes split too, so
/// `don't` yields `don` and `t`.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter_map(Token::new)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.0).collect()
    }

    #[test]
    fn lowercases() {
        assert_eq!(normalize("I LOVE This"), "i love this");
    }

    #[test]
    fn strips_mentions_and_urls_keeps_hashtag_word() {
        assert_eq!(
            normalize("great day @bob http://x.co #win"),
            "great day  win"
        );
    }

    #[test]
    fn empty_text() {
        assert_eq!(normalize(""), "");
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn nested_patterns_reach_a_fixed_point() {
        assert_eq!(normalize("@#bob hi"), " hi");
        assert_eq!(normalize("##win"), "win");
        assert_eq!(normalize("line\nbreak\u{7}"), "line break");
    }

    #[test]
    fn nfc_composition() {
        assert_eq!(normalize("cafe\u{301}"), "caf\u{e9}");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(words("i love this"), ["i", "love", "this"]);
        assert_eq!(words("don't stop"), ["don", "t", "stop"]);
        assert!(words("!!!").is_empty());
    }

    #[test]
    fn token_validation() {
        assert!(Token::new("ok").is_some());
        assert!(Token::new("").is_none());
        assert!(Token::new("Up").is_none());
        assert!(Token::new("a b").is_none());
        assert!(Token::new("--").is_none());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,40}|[a-z@#:/ .]{0,40}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn tokens_survive_rejoining(s in "\\PC{0,60}") {
            let tokens = tokenize(&normalize(&s));
            let joined = tokens.iter().map(Token::as_str).collect::<Vec<_>>().join(" ");
            prop_assert_eq!(tokenize(&joined), tokens.clone());
            for t in &tokens {
                prop_assert!(!t.as_str().chars().any(|c| c.is_uppercase() || c.is_whitespace()));
            }
        }
    }
}
