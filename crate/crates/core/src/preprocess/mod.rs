//! Comment text normalization: tokenization, stopword removal,
//! lemmatization and stemming.

mod porter;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

pub use porter::stem;

const DEFAULT_STOPWORDS: &str = include_str!("../../resources/stopwords_en.txt");
const DEFAULT_LEXICON: &str = include_str!("../../resources/lemma_lexicon.tsv");

/// Upper bound on lemmatize/stem passes when normalizing a token to its
/// fixed point.
const MAX_NORMALIZE_PASSES: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResourceError {
    #[error("line {line}: entry `{entry}` must be lowercase without whitespace or punctuation")]
    InvalidEntry { line: usize, entry: String },
    #[error("line {line}: expected `surface<TAB>lemma`")]
    MalformedLexiconLine { line: usize },
}

/// A normalized token sequence for one document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    /// Record id of the comment the tokens came from.
    pub source: Option<String>,
}

impl TokenStream {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenStream { tokens, source: None }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageOrder {
    #[default]
    LemmatizeThenStem,
    StemThenLemmatize,
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub stopwords: HashSet<String>,
    /// Characters deleted before splitting on whitespace.
    pub strip_chars: HashSet<char>,
    pub remove_stopwords: bool,
    pub lemmatize: bool,
    pub stem: bool,
    pub order: StageOrder,
    /// When false, tokens containing a digit are dropped.
    pub keep_numbers: bool,
    pub lemma_lexicon: HashMap<String, String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            stopwords: parse_word_list(DEFAULT_STOPWORDS).expect("bundled stopword list is valid"),
            strip_chars: ascii_punctuation(),
            remove_stopwords: true,
            lemmatize: true,
            stem: true,
            order: StageOrder::default(),
            keep_numbers: true,
            lemma_lexicon: parse_lexicon(DEFAULT_LEXICON).expect("bundled lexicon is valid"),
        }
    }
}

impl PreprocessConfig {
    /// Tokenization only; every later stage switched off.
    pub fn tokenize_only() -> Self {
        PreprocessConfig { remove_stopwords: false, lemmatize: false, stem: false, ..Default::default() }
    }
}

pub fn ascii_punctuation() -> HashSet<char> {
    (0u8..=127).map(char::from).filter(char::is_ascii_punctuation).collect()
}

fn is_clean_token(s: &str, strip: &HashSet<char>) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || strip.contains(&c)) && s.to_lowercase() == s
}

/// Reads a one-entry-per-line word list. Blank lines and `#` comments are
/// skipped.
pub fn parse_word_list(text: &str) -> Result<HashSet<String>, ResourceError> {
    let strip = ascii_punctuation();
    let mut out = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let entry = line.trim();
        if entry.is_empty() || entry.starts_with('#') {
            continue;
        }
        if !is_clean_token(entry, &strip) {
            return Err(ResourceError::InvalidEntry { line: i + 1, entry: entry.to_string() });
        }
        out.insert(entry.to_string());
    }
    Ok(out)
}

/// Reads a `surface<TAB>lemma` lexicon.
pub fn parse_lexicon(text: &str) -> Result<HashMap<String, String>, ResourceError> {
    let strip = ascii_punctuation();
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(surface), Some(lemma), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(ResourceError::MalformedLexiconLine { line: i + 1 });
        };
        for entry in [surface.trim(), lemma.trim()] {
            if !is_clean_token(entry, &strip) {
                return Err(ResourceError::InvalidEntry { line: i + 1, entry: entry.to_string() });
            }
        }
        out.insert(surface.trim().to_string(), lemma.trim().to_string());
    }
    Ok(out)
}

/// Deletes ASCII punctuation, lowercases and splits on whitespace runs.
pub fn tokenize(text: &str) -> TokenStream {
    tokenize_with(text, &ascii_punctuation())
}

pub fn tokenize_with(text: &str, strip: &HashSet<char>) -> TokenStream {
    let cleaned: String = text.chars().filter(|c| !strip.contains(c)).collect();
    let tokens = cleaned
        .to_lowercase()
        .split_whitespace()
        // a custom strip set may contain lowercase forms of kept characters
        .map(|t| t.chars().filter(|c| !strip.contains(c)).collect::<String>())
        .filter(|t| !t.is_empty())
        .collect();
    TokenStream::new(tokens)
}

pub fn remove_stopwords(stream: TokenStream, config: &PreprocessConfig) -> TokenStream {
    TokenStream {
        tokens: stream.tokens.into_iter().filter(|t| !config.stopwords.contains(t)).collect(),
        source: stream.source,
    }
}

/// Exception lexicon first, then plural stripping. Regular verb inflections
/// are left to the stemmer.
pub fn lemmatize(token: &str, config: &PreprocessConfig) -> String {
    if let Some(lemma) = config.lemma_lexicon.get(token) {
        return lemma.clone();
    }
    let out = strip_plural(token);
    if out.is_empty() {
        token.to_string()
    } else {
        out
    }
}

fn strip_plural(token: &str) -> String {
    if !token.is_ascii() {
        return token.to_string();
    }
    let n = token.len();
    if n >= 5 && token.ends_with("ies") {
        return format!("{}y", &token[..n - 3]);
    }
    if n >= 5 && ["sses", "xes", "zzes", "ches", "shes"].iter().any(|suffix| token.ends_with(suffix)) {
        return token[..n - 2].to_string();
    }
    if n >= 4 && token.ends_with('s') && !["ss", "us", "is"].iter().any(|s| token.ends_with(s)) {
        return token[..n - 1].to_string();
    }
    token.to_string()
}

fn normalize_once(token: &str, config: &PreprocessConfig) -> String {
    let lem = |t: &str| {
        if config.lemmatize {
            lemmatize(t, config)
        } else {
            t.to_string()
        }
    };
    let st = |t: &str| if config.stem { stem(t) } else { t.to_string() };
    match config.order {
        StageOrder::LemmatizeThenStem => st(&lem(token)),
        StageOrder::StemThenLemmatize => lem(&st(token)),
    }
}

/// Applies the configured lemmatize/stem stages until the token stops
/// changing.
pub fn normalize_token(token: &str, config: &PreprocessConfig) -> String {
    let mut current = token.to_string();
    for _ in 0..MAX_NORMALIZE_PASSES {
        let next = normalize_once(&current, config);
        if next == current || next.is_empty() {
            break;
        }
        current = next;
    }
    current
}

/// tokenize, then stopword removal, then lemmatize/stem in the configured
/// order. Tokens whose normalized form is a stopword are dropped too, so
/// running the pipeline on its own joined output changes nothing.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> TokenStream {
    let mut stream = tokenize_with(text, &config.strip_chars);
    if !config.keep_numbers {
        stream.tokens.retain(|t| !t.chars().any(|c| c.is_ascii_digit()));
    }
    if config.remove_stopwords {
        stream = remove_stopwords(stream, config);
    }
    if config.lemmatize || config.stem {
        stream.tokens = stream
            .tokens
            .iter()
            .map(|t| normalize_token(t, config))
            .filter(|t| !(config.remove_stopwords && config.stopwords.contains(t)))
            .collect();
    }
    stream
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &TokenStream) -> Vec<&str> {
        s.tokens.iter().map(String::as_str).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            toks(&tokenize("Spill of brine, near the pad.")),
            vec!["spill", "of", "brine", "near", "the", "pad"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(toks(&tokenize("WELL   pad")), vec!["well", "pad"]);
        assert_eq!(toks(&tokenize("E&S 500 bbl")), vec!["es", "500", "bbl"]);
    }

    #[test]
    fn stopword_examples() {
        let cfg = PreprocessConfig::default();
        let s = TokenStream::new(["the", "spill", "is", "on", "the", "pad"].map(String::from).to_vec());
        assert_eq!(toks(&remove_stopwords(s, &cfg)), vec!["spill", "pad"]);
        assert!(remove_stopwords(TokenStream::default(), &cfg).is_empty());
        let s = TokenStream::new(["brine", "tank"].map(String::from).to_vec());
        assert_eq!(remove_stopwords(s.clone(), &cfg), s);
        for w in ["the", "is", "at", "which", "on", "want", "could", "can"] {
            assert!(cfg.stopwords.contains(w), "{w} should be a stopword");
        }
    }

    #[test]
    fn lemmatize_examples() {
        let cfg = PreprocessConfig::default();
        assert_eq!(lemmatize("cars", &cfg), "car");
        assert_eq!(lemmatize("ate", &cfg), "eat");
        assert_eq!(lemmatize("pad", &cfg), "pad");
        assert_eq!(lemmatize("ponies", &cfg), "pony");
        assert_eq!(lemmatize("boxes", &cfg), "box");
        assert_eq!(lemmatize("gas", &cfg), "gas");
        assert_eq!(lemmatize("glass", &cfg), "glass");
        assert_eq!(lemmatize("s", &cfg), "s");
    }

    #[test]
    fn preprocess_examples() {
        let cfg = PreprocessConfig::default();
        assert_eq!(toks(&preprocess("The brine was spilled on pads", &cfg)), vec!["brine", "spill", "pad"]);
        assert!(preprocess("", &cfg).is_empty());
        let raw = "The brine WAS spilled, on pads!";
        assert_eq!(preprocess(raw, &PreprocessConfig::tokenize_only()), tokenize(raw));
    }

    #[test]
    fn numbers_toggle() {
        let mut cfg = PreprocessConfig::default();
        assert_eq!(toks(&preprocess("500 gallons", &cfg)), vec!["500", "gallon"]);
        cfg.keep_numbers = false;
        assert_eq!(toks(&preprocess("500 gallons", &cfg)), vec!["gallon"]);
    }

    #[test]
    fn stem_first_order() {
        let cfg = PreprocessConfig { order: StageOrder::StemThenLemmatize, ..Default::default() };
        assert_eq!(toks(&preprocess("ponies children", &cfg)), vec!["poni", "child"]);
    }

    #[test]
    fn resource_parsing_errors() {
        assert!(matches!(
            parse_word_list("fine\nNot-Fine\n"),
            Err(ResourceError::InvalidEntry { line: 2, .. })
        ));
        assert_eq!(
            parse_lexicon("ate\teat\nbroken line\n"),
            Err(ResourceError::MalformedLexiconLine { line: 2 })
        );
        let lex = parse_lexicon("# comment\nmice\tmouse\n").unwrap();
        assert_eq!(lex["mice"], "mouse");
    }

    #[test]
    fn fixed_point_absorbs_porter_non_idempotence() {
        // "agreed" -> "agre" -> "agr" under repeated Porter stemming
        let cfg = PreprocessConfig::default();
        let once = preprocess("agreed", &cfg);
        assert_eq!(preprocess(&once.join(), &cfg), once);
    }
}
