//! Turns Java test-method source into normalized tokens.
//!
//! The pipeline always starts with a delimiter split ([`tokenize_raw`]) and
//! then applies the enabled stages in a fixed order: identifier splitting,
//! lowercasing, stop-word removal, stemming.

mod porter;
mod stopwords;
mod tokenize;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use porter::stem_word;
pub use stopwords::{is_stop_word, stop_words};
pub use tokenize::{is_token_char, split_identifier_str, tokenize_raw_str};

/// A non-empty run of `[A-Za-z0-9_$]` characters (or a fragment of one).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    /// Wraps `text`; returns `None` for the empty string.
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        (!text.is_empty()).then_some(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Which preprocessing stages run after the delimiter split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub split_identifiers: bool,
    pub lowercase: bool,
    pub remove_stop_words: bool,
    pub stem: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl PipelineConfig {
    /// Every stage enabled.
    pub const fn full() -> Self {
        Self {
            split_identifiers: true,
            lowercase: true,
            remove_stop_words: true,
            stem: true,
        }
    }

    /// Raw delimiter tokens only.
    pub const fn none() -> Self {
        Self {
            split_identifiers: false,
            lowercase: false,
            remove_stop_words: false,
            stem: false,
        }
    }

    pub const fn only_split() -> Self {
        Self {
            split_identifiers: true,
            ..Self::none()
        }
    }

    /// Short stable description used in fingerprints, e.g. `split+lower+stop+stem`.
    pub fn describe(&self) -> String {
        let parts: Vec<&str> = [
            (self.split_identifiers, "split"),
            (self.lowercase, "lower"),
            (self.remove_stop_words, "stop"),
            (self.stem, "stem"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, name)| *name)
        .collect();
        if parts.is_empty() {
            "raw".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// Splits `body` on every character outside `[A-Za-z0-9_$]`.
pub fn tokenize_raw(body: &str) -> Vec<Token> {
    tokenize_raw_str(body).map(|s| Token(s.to_string())).collect()
}

/// Splits an identifier at camel-case, letter/digit and `_`/`$` boundaries.
pub fn split_identifier(token: &Token) -> Vec<Token> {
    split_identifier_str(token.as_str())
        .into_iter()
        .map(|s| Token(s.to_string()))
        .collect()
}

pub fn lowercase(token: &Token) -> Token {
    Token(token.0.to_ascii_lowercase())
}

pub fn remove_stop_words(tokens: Vec<Token>) -> Vec<Token> {
    tokens.into_iter().filter(|t| !is_stop_word(t.as_str())).collect()
}

pub fn stem(token: &Token) -> Token {
    Token(stem_word(token.as_str()))
}

/// Runs the configured pipeline over one test body.
pub fn run_pipeline(cfg: &PipelineConfig, body: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for raw in tokenize_raw_str(body) {
        let pieces = if cfg.split_identifiers {
            split_identifier_str(raw)
        } else {
            vec![raw]
        };
        for piece in pieces {
            let mut text = if cfg.lowercase {
                piece.to_ascii_lowercase()
            } else {
                piece.to_string()
            };
            if cfg.remove_stop_words && is_stop_word(&text) {
                continue;
            }
            if cfg.stem {
                text = stem_word(&text);
            }
            out.push(Token(text));
        }
    }
    out
}
