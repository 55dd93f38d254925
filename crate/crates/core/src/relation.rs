//! Location → Operation → Contaminant chains selected from the three
//! pairwise similarity matrices by upper-quartile filtering and top-k
//! truncation.

use std::collections::HashSet;
use std::io::{Read, Write};

use thiserror::Error;

use crate::catalog::{Category, KeywordCatalog};
use crate::similarity::SimilarityMatrix;

pub const DEFAULT_K: usize = 3;

/// How the quartile threshold is computed; recorded in report metadata.
pub const PERCENTILE_METHOD: &str =
    "linear interpolation at rank 0.75(n+1) of the ascending values, clamped to [1, n]";

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("label `{label}` of {found_in} has no match in {missing_from}")]
    LabelMismatch { label: String, found_in: &'static str, missing_from: &'static str },
    #[error("chain file line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("chain file: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Whether the quartile threshold is taken over each row or over the whole
/// matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuartileScope {
    #[default]
    PerRow,
    Global,
}

impl QuartileScope {
    pub fn name(self) -> &'static str {
        match self {
            QuartileScope::PerRow => "per-row",
            QuartileScope::Global => "global",
        }
    }
}

impl std::str::FromStr for QuartileScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per-row" | "row" => Ok(QuartileScope::PerRow),
            "global" => Ok(QuartileScope::Global),
            other => Err(format!("unknown quartile scope `{other}` (expected per-row or global)")),
        }
    }
}

/// 75th percentile of `values`. Panics if `values` is empty.
pub fn quartile_threshold(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty set");
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    // 1-based rank 3(n+1)/4 = j + r/4
    let j = 3 * (n + 1) / 4;
    let r = 3 * (n + 1) % 4;
    if j >= n {
        return s[n - 1];
    }
    let (lo, hi) = (s[j - 1], s[j]);
    (lo + (r as f64 / 4.0) * (hi - lo)).min(hi)
}

/// Columns of `row` with value `>= threshold`, descending, ties by column
/// index.
pub fn select_at_least(matrix: &SimilarityMatrix, row: usize, threshold: f64) -> Vec<(usize, f64)> {
    let mut picked: Vec<(usize, f64)> = matrix
        .values
        .row(row)
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= threshold)
        .map(|(j, v)| (j, *v))
        .collect();
    picked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    picked
}

/// The columns at or above the row's 75th percentile, descending.
pub fn upper_quartile_select(matrix: &SimilarityMatrix, row: usize) -> Vec<(String, f64)> {
    let p = quartile_threshold(&matrix.values.row(row).to_vec());
    select_at_least(matrix, row, p).into_iter().map(|(j, v)| (matrix.col_labels[j].clone(), v)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub label: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperationLink {
    pub operation: String,
    pub similarity: f64,
    pub contaminants: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationChain {
    pub location: String,
    pub location_contaminants: Vec<Link>,
    pub operations: Vec<OperationLink>,
}

struct Selector<'a> {
    matrix: &'a SimilarityMatrix,
    global: Option<f64>,
    k: usize,
}

impl<'a> Selector<'a> {
    fn new(matrix: &'a SimilarityMatrix, scope: QuartileScope, k: usize) -> Self {
        let global = (scope == QuartileScope::Global)
            .then(|| quartile_threshold(&matrix.values.iter().copied().collect::<Vec<_>>()));
        Selector { matrix, global, k }
    }

    fn top(&self, row: usize) -> Vec<Link> {
        let p = self.global.unwrap_or_else(|| quartile_threshold(&self.matrix.values.row(row).to_vec()));
        let mut seen = HashSet::new();
        select_at_least(self.matrix, row, p)
            .into_iter()
            .filter(|(j, _)| seen.insert(self.matrix.col_labels[*j].as_str()))
            .take(self.k)
            .map(|(j, v)| Link { label: self.matrix.col_labels[j].clone(), similarity: v })
            .collect()
    }
}

fn check_same_labels(
    a: &[String],
    a_name: &'static str,
    b: &[String],
    b_name: &'static str,
) -> Result<(), RelationError> {
    let bs: HashSet<&String> = b.iter().collect();
    if let Some(l) = a.iter().find(|l| !bs.contains(l)) {
        return Err(RelationError::LabelMismatch {
            label: l.clone(),
            found_in: a_name,
            missing_from: b_name,
        });
    }
    let as_: HashSet<&String> = a.iter().collect();
    if let Some(l) = b.iter().find(|l| !as_.contains(l)) {
        return Err(RelationError::LabelMismatch {
            label: l.clone(),
            found_in: b_name,
            missing_from: a_name,
        });
    }
    Ok(())
}

/// One chain per location row of `loc_cont`, in row order.
///
/// Requires `loc_cont` and `loc_op` to share row labels and `loc_op`'s
/// columns to equal `op_cont`'s rows.
pub fn build_chains(
    loc_cont: &SimilarityMatrix,
    loc_op: &SimilarityMatrix,
    op_cont: &SimilarityMatrix,
    k: usize,
    scope: QuartileScope,
) -> Result<Vec<RelationChain>, RelationError> {
    if k == 0 {
        return Err(RelationError::InvalidK);
    }
    check_same_labels(
        &loc_cont.row_labels,
        "location-contaminant rows",
        &loc_op.row_labels,
        "location-operation rows",
    )?;
    check_same_labels(
        &loc_op.col_labels,
        "location-operation columns",
        &op_cont.row_labels,
        "operation-contaminant rows",
    )?;

    let lc = Selector::new(loc_cont, scope, k);
    let lo = Selector::new(loc_op, scope, k);
    let oc = Selector::new(op_cont, scope, k);
    let row_of = |m: &SimilarityMatrix, label: &str| {
        m.row_labels.iter().position(|l| l == label).expect("labels checked")
    };

    Ok(loc_cont
        .row_labels
        .iter()
        .enumerate()
        .map(|(i, location)| RelationChain {
            location: location.clone(),
            location_contaminants: lc.top(i),
            operations: lo
                .top(row_of(loc_op, location))
                .into_iter()
                .map(|op| OperationLink {
                    contaminants: oc.top(row_of(op_cont, &op.label)),
                    operation: op.label,
                    similarity: op.similarity,
                })
                .collect(),
        })
        .collect())
}

/// The first chain label that is not in its catalog category, if any.
pub fn find_category_violation(chains: &[RelationChain], catalog: &KeywordCatalog) -> Option<String> {
    let has = |cat: Category, label: &str| catalog.keywords(cat).iter().any(|k| k.label == label);
    for c in chains {
        if !has(Category::Location, &c.location) {
            return Some(c.location.clone());
        }
        let contaminants =
            c.location_contaminants.iter().chain(c.operations.iter().flat_map(|o| o.contaminants.iter()));
        for l in contaminants {
            if !has(Category::Contaminant, &l.label) {
                return Some(l.label.clone());
            }
        }
        if let Some(o) = c.operations.iter().find(|o| !has(Category::Operation, &o.operation)) {
            return Some(o.operation.clone());
        }
    }
    None
}

const CHAIN_HEADER: [&str; 6] =
    ["location", "op_rank", "operation", "cont_rank", "contaminant", "similarity"];

/// Tab-separated export. Location→contaminant rows have `op_rank` 0,
/// location→operation rows have `cont_rank` 0, and operation→contaminant
/// rows carry both ranks (1-based). A chain with no links is a single row
/// with both ranks 0.
pub fn write_chains<W: Write>(chains: &[RelationChain], w: W) -> Result<(), RelationError> {
    let mut out = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    out.write_record(CHAIN_HEADER)?;
    for c in chains {
        if c.location_contaminants.is_empty() && c.operations.is_empty() {
            out.write_record([c.location.as_str(), "0", "", "0", "", ""])?;
        }
        for (ci, l) in c.location_contaminants.iter().enumerate() {
            out.write_record([
                c.location.clone(),
                "0".into(),
                String::new(),
                (ci + 1).to_string(),
                l.label.clone(),
                l.similarity.to_string(),
            ])?;
        }
        for (oi, op) in c.operations.iter().enumerate() {
            let rank = (oi + 1).to_string();
            out.write_record([
                c.location.clone(),
                rank.clone(),
                op.operation.clone(),
                "0".into(),
                String::new(),
                op.similarity.to_string(),
            ])?;
            for (ci, l) in op.contaminants.iter().enumerate() {
                out.write_record([
                    c.location.clone(),
                    rank.clone(),
                    op.operation.clone(),
                    (ci + 1).to_string(),
                    l.label.clone(),
                    l.similarity.to_string(),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Parses the output of [`write_chains`].
pub fn read_chains<R: Read>(r: R) -> Result<Vec<RelationChain>, RelationError> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CHAIN_HEADER) {
        return Err(RelationError::Malformed {
            line: 1,
            message: format!("expected header {}", CHAIN_HEADER.join("\t")),
        });
    }
    let mut chains: Vec<RelationChain> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| RelationError::Malformed { line, message };
        if rec.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", rec.len())));
        }
        let rank =
            |i: usize| rec[i].parse::<usize>().map_err(|e| bad(format!("bad {}: {e}", CHAIN_HEADER[i])));
        let (op_rank, cont_rank) = (rank(1)?, rank(3)?);
        let location = &rec[0];
        if chains.last().is_none_or(|c| c.location != location) {
            if chains.iter().any(|c| c.location == location) {
                return Err(bad(format!("location `{location}` is not contiguous")));
            }
            chains.push(RelationChain {
                location: location.to_string(),
                location_contaminants: Vec::new(),
                operations: Vec::new(),
            });
        }
        let chain = chains.last_mut().expect("pushed");
        if op_rank == 0 && cont_rank == 0 {
            if !rec[2].is_empty() || !rec[4].is_empty() || !rec[5].is_empty() {
                return Err(bad("rank-0 row must be empty".into()));
            }
            continue;
        }
        let similarity: f64 = rec[5].parse().map_err(|e| bad(format!("bad similarity: {e}")))?;
        match (op_rank, cont_rank) {
            (0, c) => {
                if c != chain.location_contaminants.len() + 1 {
                    return Err(bad(format!("contaminant rank {c} out of sequence")));
                }
                chain.location_contaminants.push(Link { label: rec[4].to_string(), similarity });
            }
            (o, 0) => {
                if o != chain.operations.len() + 1 {
                    return Err(bad(format!("operation rank {o} out of sequence")));
                }
                chain.operations.push(OperationLink {
                    operation: rec[2].to_string(),
                    similarity,
                    contaminants: Vec::new(),
                });
            }
            (o, c) => {
                let n_ops = chain.operations.len();
                let op = match chain.operations.last_mut() {
                    Some(op) if o == n_ops && op.operation == rec[2] => op,
                    _ => return Err(bad(format!("operation rank {o} has no operation row"))),
                };
                if c != op.contaminants.len() + 1 {
                    return Err(bad(format!("contaminant rank {c} out of sequence")));
                }
                op.contaminants.push(Link { label: rec[4].to_string(), similarity });
            }
        }
    }
    Ok(chains)
}
