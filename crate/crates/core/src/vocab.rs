//! Token/id mapping with corpus frequencies.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use crate::preprocess::TokenStream;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("empty corpus: no tokens to build a vocabulary from")]
    EmptyCorpus,
    #[error("no token reaches min_count {0}")]
    EmptyVocabulary(u64),
    #[error("min_count must be at least 1")]
    InvalidMinCount,
    #[error("vocabulary dump line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Dense token ids ordered by descending frequency, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
    counts: Vec<u64>,
    total_token_count: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from already-counted tokens. Entries are re-sorted
    /// into id order; duplicate tokens have their counts summed.
    pub fn from_counts<I, S>(counts: I, total_token_count: u64) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut merged: HashMap<String, u64> = HashMap::new();
        for (t, c) in counts {
            *merged.entry(t.into()).or_insert(0) += c;
        }
        let mut entries: Vec<(String, u64)> = merged.into_iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self::from_ordered(entries, total_token_count)
    }

    /// Builds a vocabulary keeping `entries` in the given id order. Panics on
    /// duplicate tokens.
    pub fn from_ordered(entries: Vec<(String, u64)>, total_token_count: u64) -> Self {
        let mut index = HashMap::with_capacity(entries.len());
        let mut tokens = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (id, (t, c)) in entries.into_iter().enumerate() {
            assert!(index.insert(t.clone(), id).is_none(), "duplicate token `{t}`");
            tokens.push(t);
            counts.push(c);
        }
        Vocabulary { index, tokens, counts, total_token_count }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn frequency(&self, token: &str) -> Option<u64> {
        self.id(token).map(|id| self.counts[id])
    }

    /// Every token occurrence seen at build time, including tokens dropped by
    /// `min_count`.
    pub fn total_token_count(&self) -> u64 {
        self.total_token_count
    }

    pub fn kept_token_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Writes `token<TAB>frequency` lines in id order, preceded by a
    /// `# total_tokens` comment.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# total_tokens\t{}", self.total_token_count)?;
        for (t, c) in self.tokens.iter().zip(&self.counts) {
            writeln!(w, "{t}\t{c}")?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self, VocabError> {
        let mut entries = Vec::new();
        let mut total = None;
        let mut seen = HashMap::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("total_tokens") {
                    total = Some(
                        v.trim()
                            .parse::<u64>()
                            .map_err(|e| VocabError::Malformed { line: lineno, message: e.to_string() })?,
                    );
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| VocabError::Malformed { line: lineno, message };
            let (token, freq) =
                line.split_once('\t').ok_or_else(|| malformed("expected token<TAB>frequency".into()))?;
            let freq: u64 = freq.trim().parse().map_err(|e| malformed(format!("{e}")))?;
            if token.is_empty() {
                return Err(malformed("empty token".into()));
            }
            if seen.insert(token.to_string(), lineno).is_some() {
                return Err(malformed(format!("duplicate token `{token}`")));
            }
            entries.push((token.to_string(), freq));
        }
        let kept: u64 = entries.iter().map(|e| e.1).sum();
        Ok(Self::from_ordered(entries, total.unwrap_or(kept)))
    }
}

/// Counts every token across `streams` and keeps those seen at least
/// `min_count` times.
pub fn build_vocabulary(streams: &[TokenStream], min_count: u64) -> Result<Vocabulary, VocabError> {
    if min_count == 0 {
        return Err(VocabError::InvalidMinCount);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    let mut total = 0u64;
    for s in streams {
        for t in &s.tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(VocabError::EmptyCorpus);
    }
    let mut entries: Vec<(String, u64)> =
        counts.into_iter().filter(|(_, c)| *c >= min_count).map(|(t, c)| (t.to_string(), c)).collect();
    if entries.is_empty() {
        return Err(VocabError::EmptyVocabulary(min_count));
    }
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocabulary::from_ordered(entries, total))
}

/// The `n` most frequent tokens, descending, ties lexicographic.
pub fn top_frequent(vocab: &Vocabulary, n: usize) -> Vec<(String, u64)> {
    vocab.tokens.iter().zip(&vocab.counts).take(n).map(|(t, c)| (t.clone(), *c)).collect()
}
