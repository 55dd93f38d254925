//! Cosine similarity between keyword embeddings and the annotated pairwise
//! category matrices.

use std::io::Write;

use log::warn;
use ndarray::{Array1, Array2, ArrayView1};
use thiserror::Error;

use crate::skipgram::EmbeddingModel;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("cosine is undefined for a zero-norm vector")]
    ZeroNorm,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("every {0} token is out of vocabulary")]
    EmptyAxis(Axis),
    #[error("token `{0}` is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("neighbor count must be at least 1")]
    InvalidCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Row => "row",
            Axis::Column => "column",
        })
    }
}

/// Which model weights represent a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VectorSource {
    /// Rows of the input (hidden-layer) matrix.
    #[default]
    Input,
    /// Mean of the input and output rows.
    Mean,
}

impl VectorSource {
    pub fn vector(self, model: &EmbeddingModel, id: usize) -> Array1<f64> {
        match self {
            VectorSource::Input => model.input.row(id).to_owned(),
            VectorSource::Mean => model.mean_vector(id),
        }
    }
}

/// `a . b / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64, SimilarityError> {
    if a.len() != b.len() {
        return Err(SimilarityError::DimensionMismatch(a.len(), b.len()));
    }
    let mut dot = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(SimilarityError::ZeroNorm);
    }
    Ok((dot / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

/// Index of the largest row value and of the largest column value, ties to
/// the lowest index. Panics on an empty matrix.
pub fn annotate_extremes(values: &Array2<f64>) -> (Vec<usize>, Vec<usize>) {
    assert!(!values.is_empty(), "cannot annotate an empty matrix");
    let argmax = |it: ArrayView1<'_, f64>| {
        let mut best = 0;
        for (i, v) in it.iter().enumerate() {
            if *v > it[best] {
                best = i;
            }
        }
        best
    };
    let rows = values.rows().into_iter().map(argmax).collect();
    let cols = values.columns().into_iter().map(argmax).collect();
    (rows, cols)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Array2<f64>,
    pub row_max_col: Vec<usize>,
    pub col_max_row: Vec<usize>,
}

impl SimilarityMatrix {
    /// Wraps `values` and computes the extreme annotations.
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        values: Array2<f64>,
    ) -> Result<Self, SimilarityError> {
        assert_eq!(values.dim(), (row_labels.len(), col_labels.len()), "label/shape mismatch");
        if row_labels.is_empty() {
            return Err(SimilarityError::EmptyAxis(Axis::Row));
        }
        if col_labels.is_empty() {
            return Err(SimilarityError::EmptyAxis(Axis::Column));
        }
        let (row_max_col, col_max_row) = annotate_extremes(&values);
        Ok(SimilarityMatrix { row_labels, col_labels, values, row_max_col, col_max_row })
    }

    pub fn nrows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn ncols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.row_labels.iter().position(|l| l == row)?;
        let j = self.col_labels.iter().position(|l| l == col)?;
        Some(self.values[[i, j]])
    }

    pub fn transpose(&self) -> SimilarityMatrix {
        SimilarityMatrix::new(self.col_labels.clone(), self.row_labels.clone(), self.values.t().to_owned())
            .expect("non-empty")
    }

    /// Tab-separated matrix with a header row and a label column.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "token")?;
        for c in &self.col_labels {
            write!(w, "\t{c}")?;
        }
        writeln!(w)?;
        for (label, row) in self.row_labels.iter().zip(self.values.rows()) {
            write!(w, "{label}")?;
            for v in row {
                write!(w, "\t{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// `kind<TAB>label<TAB>max_label<TAB>value` lines: one `row_max` line per
    /// row and one `col_max` line per column.
    pub fn write_annotations<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "kind\tlabel\tmax_label\tvalue")?;
        for (i, &j) in self.row_max_col.iter().enumerate() {
            writeln!(w, "row_max\t{}\t{}\t{}", self.row_labels[i], self.col_labels[j], self.values[[i, j]])?;
        }
        for (j, &i) in self.col_max_row.iter().enumerate() {
            writeln!(w, "col_max\t{}\t{}\t{}", self.col_labels[j], self.row_labels[i], self.values[[i, j]])?;
        }
        Ok(())
    }
}

/// A catalog term that could not be placed in a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedTerm {
    pub axis: Axis,
    pub label: String,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseResult {
    pub matrix: SimilarityMatrix,
    pub dropped: Vec<DroppedTerm>,
}

/// Cosine matrix between `rows` and `cols`, each given as `(label, token)`.
/// Terms whose token is out of vocabulary or has a zero vector are dropped
/// and reported.
pub fn pairwise_matrix_labeled(
    model: &EmbeddingModel,
    rows: &[(String, String)],
    cols: &[(String, String)],
    source: VectorSource,
) -> Result<PairwiseResult, SimilarityError> {
    let mut dropped = Vec::new();
    let mut resolve = |terms: &[(String, String)], axis: Axis| {
        let mut labels = Vec::new();
        let mut vectors = Vec::new();
        for (label, token) in terms {
            let v = model.vocab.id(token).map(|id| source.vector(model, id));
            match v {
                Some(v) if v.iter().any(|x| *x != 0.0) => {
                    labels.push(label.clone());
                    vectors.push(v);
                }
                _ => {
                    warn!("dropping {axis} term `{label}` (token `{token}`): no usable vector");
                    dropped.push(DroppedTerm { axis, label: label.clone(), token: token.clone() });
                }
            }
        }
        (labels, vectors)
    };
    let (row_labels, row_vecs) = resolve(rows, Axis::Row);
    let (col_labels, col_vecs) = resolve(cols, Axis::Column);
    if row_labels.is_empty() {
        return Err(SimilarityError::EmptyAxis(Axis::Row));
    }
    if col_labels.is_empty() {
        return Err(SimilarityError::EmptyAxis(Axis::Column));
    }
    let mut values = Array2::zeros((row_vecs.len(), col_vecs.len()));
    for (i, r) in row_vecs.iter().enumerate() {
        for (j, c) in col_vecs.iter().enumerate() {
            values[[i, j]] = cosine(r.view(), c.view())?;
        }
    }
    Ok(PairwiseResult { matrix: SimilarityMatrix::new(row_labels, col_labels, values)?, dropped })
}

/// [`pairwise_matrix_labeled`] with tokens as their own labels.
pub fn pairwise_matrix(
    model: &EmbeddingModel,
    rows: &[&str],
    cols: &[&str],
    source: VectorSource,
) -> Result<PairwiseResult, SimilarityError> {
    let own = |ts: &[&str]| -> Vec<(String, String)> {
        ts.iter().map(|t| (t.to_string(), t.to_string())).collect()
    };
    pairwise_matrix_labeled(model, &own(rows), &own(cols), source)
}

/// The `n` vocabulary tokens most similar to `token`, excluding itself,
/// descending; ties go to the lower id. Zero vectors are skipped.
pub fn nearest_neighbors(
    model: &EmbeddingModel,
    token: &str,
    n: usize,
    source: VectorSource,
) -> Result<Vec<(String, f64)>, SimilarityError> {
    if n == 0 {
        return Err(SimilarityError::InvalidCount);
    }
    let q = model.vocab.id(token).ok_or_else(|| SimilarityError::OutOfVocabulary(token.to_string()))?;
    let qv = source.vector(model, q);
    if qv.iter().all(|x| *x == 0.0) {
        return Err(SimilarityError::ZeroNorm);
    }
    let mut scored: Vec<(usize, f64)> = (0..model.vocab_size())
        .filter(|&id| id != q)
        .filter_map(|id| Some((id, cosine(qv.view(), source.vector(model, id).view()).ok()?)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(n).map(|(id, s)| (model.vocab.token(id).to_string(), s)).collect())
}
