//! Text normalization and tokenization for Portuguese reviews.
//!
//! Normalization lowercases, folds `ç` to `c` and strips diacritics through
//! canonical decomposition. Tokenization keeps maximal `[a-z0-9]` runs whose
//! length lies within the configured bounds and drops stopwords.

use std::collections::BTreeSet;
use std::path::Path;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Portuguese stopword list shipped with the crate (already normalized).
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_pt.txt");

/// Lowercase `text`, map `ç` to `c` and remove every combining mark left by
/// canonical decomposition. Characters outside `[a-z0-9]` are kept.
pub fn normalize_text(text: &str) -> String {
    let folded: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c == 'ç' { 'c' } else { c })
        .collect();
    folded
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationConfig {
    min_token_len: usize,
    max_token_len: usize,
    stopwords: BTreeSet<String>,
    /// Kept for configuration records; the `ç` pre-pass always runs in
    /// [`normalize_text`].
    pub fold_c_cedilla: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            min_token_len: 2,
            max_token_len: 30,
            stopwords: BTreeSet::new(),
            fold_c_cedilla: true,
        }
    }
}

impl NormalizationConfig {
    pub fn new(
        min_token_len: usize,
        max_token_len: usize,
        stopwords: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        if min_token_len < 1 || min_token_len > max_token_len {
            return Err(Error::Config(format!(
                "token length bounds must satisfy 1 <= min <= max, got {min_token_len}..{max_token_len}"
            )));
        }
        let stopwords = stopwords.into_iter().map(|w| normalize_text(&w)).collect();
        Ok(NormalizationConfig {
            min_token_len,
            max_token_len,
            stopwords,
            fold_c_cedilla: true,
        })
    }

    /// Default bounds with the shipped Portuguese stopword list.
    pub fn portuguese() -> Self {
        let stopwords = parse_stopwords(DEFAULT_STOPWORDS).expect("shipped stopword list is valid");
        NormalizationConfig {
            stopwords,
            ..Default::default()
        }
    }

    pub fn with_stopwords(mut self, stopwords: BTreeSet<String>) -> Self {
        self.stopwords = stopwords;
        self
    }

    pub fn min_token_len(&self) -> usize {
        self.min_token_len
    }

    pub fn max_token_len(&self) -> usize {
        self.max_token_len
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }
}

fn alnum_runs(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
        .filter(|run| !run.is_empty())
}

/// Split normalized text into tokens. Length filtering happens before the
/// stopword check.
pub fn tokenize(text: &str, config: &NormalizationConfig) -> Vec<String> {
    alnum_runs(text)
        .filter(|run| (config.min_token_len..=config.max_token_len).contains(&run.len()))
        .filter(|run| !config.stopwords.contains(*run))
        .map(str::to_owned)
        .collect()
}

/// `tokenize(normalize_text(text))`.
pub fn preprocess(text: &str, config: &NormalizationConfig) -> Vec<String> {
    tokenize(&normalize_text(text), config)
}

/// Parse a stopword list: one word per line, `#` starts a comment line,
/// blank lines are ignored. Entries are normalized; each must form exactly
/// one alphanumeric run.
pub fn parse_stopwords(contents: &str) -> Result<BTreeSet<String>> {
    let mut words = BTreeSet::new();
    for (idx, line) in contents.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let normalized = normalize_text(line);
        let mut runs = alnum_runs(&normalized);
        match (runs.next(), runs.next()) {
            (Some(word), None) => {
                words.insert(word.to_owned());
            }
            (None, _) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("stopword `{line}` contains no alphanumeric characters"),
                })
            }
            (Some(_), Some(_)) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("stopword `{line}` splits into more than one token"),
                })
            }
        }
    }
    Ok(words)
}

pub fn load_stopwords(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let contents = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_stopwords(&contents)
}
