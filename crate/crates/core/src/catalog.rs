//! The three-way keyword taxonomy: contaminants (leak source), locations
//! (leakage pathway) and operations (driving force).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::vocab::Vocabulary;

/// Eligibility threshold: a keyword must occur strictly more often than this.
pub const DEFAULT_THRESHOLD: u64 = 30;

const DEFAULT_CATALOG: &str = include_str!("../resources/keyword_catalog.tsv");

/// The bundled catalog file.
pub fn default_catalog_text() -> &'static str {
    DEFAULT_CATALOG
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Contaminant,
    Location,
    Operation,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Contaminant, Category::Location, Category::Operation];

    pub fn name(self) -> &'static str {
        match self {
            Category::Contaminant => "Contaminant",
            Category::Location => "Location",
            Category::Operation => "Operation",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CatalogError {
    #[error("catalog line {line}: expected `category<TAB>keyword`")]
    Malformed { line: usize },
    #[error("catalog line {line}: {message}")]
    UnknownCategory { line: usize, message: String },
    #[error("catalog line {line}: keyword `{keyword}` already listed under {first}")]
    Duplicate { line: usize, keyword: String, first: Category },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keyword {
    /// The keyword as written in the catalog file.
    pub label: String,
    /// The vocabulary form of the keyword.
    pub token: String,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectReason {
    OutOfVocabulary,
    BelowThreshold { frequency: u64, threshold: u64 },
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::OutOfVocabulary => f.write_str("out of vocabulary"),
            RejectReason::BelowThreshold { frequency, threshold } => {
                write!(f, "frequency {frequency} not above threshold {threshold}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub category: Category,
    pub label: String,
    pub token: String,
    pub reason: RejectReason,
}

/// Accepted keywords per category, in catalog-file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordCatalog {
    contaminants: Vec<Keyword>,
    locations: Vec<Keyword>,
    operations: Vec<Keyword>,
}

impl KeywordCatalog {
    pub fn keywords(&self, category: Category) -> &[Keyword] {
        match category {
            Category::Contaminant => &self.contaminants,
            Category::Location => &self.locations,
            Category::Operation => &self.operations,
        }
    }

    fn keywords_mut(&mut self, category: Category) -> &mut Vec<Keyword> {
        match category {
            Category::Contaminant => &mut self.contaminants,
            Category::Location => &mut self.locations,
            Category::Operation => &mut self.operations,
        }
    }

    /// (label, token) pairs for one category.
    pub fn terms(&self, category: Category) -> Vec<(String, String)> {
        self.keywords(category).iter().map(|k| (k.label.clone(), k.token.clone())).collect()
    }

    pub fn category_of_label(&self, label: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| self.keywords(*c).iter().any(|k| k.label == label))
    }

    pub fn len(&self) -> usize {
        Category::ALL.iter().map(|c| self.keywords(*c).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when no keyword appears in two categories.
    pub fn is_disjoint(&self) -> bool {
        let mut seen = HashMap::new();
        for c in Category::ALL {
            for k in self.keywords(c) {
                if let Some(prev) = seen.insert(k.token.as_str(), c) {
                    if prev != c {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogLoad {
    pub catalog: KeywordCatalog,
    pub rejections: Vec<Rejection>,
}

/// Loads a `category<TAB>keyword` catalog (`#` comments allowed), keeping
/// keywords whose vocabulary frequency is strictly above `threshold`.
///
/// `normalize` maps a catalog keyword to its vocabulary form; pass the corpus
/// token normalizer so surface forms match preprocessed tokens.
pub fn load_keyword_catalog<F>(
    text: &str,
    vocab: &Vocabulary,
    threshold: u64,
    normalize: F,
) -> Result<CatalogLoad, CatalogError>
where
    F: Fn(&str) -> String,
{
    let mut catalog = KeywordCatalog::default();
    let mut rejections = Vec::new();
    let mut seen: HashMap<String, Category> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (cat, keyword) = trimmed.split_once('\t').ok_or(CatalogError::Malformed { line })?;
        let keyword = keyword.trim();
        if keyword.is_empty() || keyword.contains('\t') {
            return Err(CatalogError::Malformed { line });
        }
        let category: Category =
            cat.parse().map_err(|message| CatalogError::UnknownCategory { line, message })?;
        let token = normalize(keyword);
        if let Some(first) = seen.get(&token) {
            return Err(CatalogError::Duplicate { line, keyword: keyword.to_string(), first: *first });
        }
        seen.insert(token.clone(), category);

        match vocab.frequency(&token) {
            None => rejections.push(Rejection {
                category,
                label: keyword.to_string(),
                token,
                reason: RejectReason::OutOfVocabulary,
            }),
            Some(frequency) if frequency <= threshold => rejections.push(Rejection {
                category,
                label: keyword.to_string(),
                token,
                reason: RejectReason::BelowThreshold { frequency, threshold },
            }),
            Some(frequency) => {
                catalog.keywords_mut(category).push(Keyword { label: keyword.to_string(), token, frequency })
            }
        }
    }
    debug_assert!(catalog.is_disjoint());
    Ok(CatalogLoad { catalog, rejections })
}
