//! Plain-text matrix files: a `V d` header line, then one
//! `token v1 ... vd` line per vocabulary id. Values use the shortest
//! representation that parses back to the same `f64`.

use std::io::{BufRead, Write};

use ndarray::Array2;
use thiserror::Error;

use super::EmbeddingModel;
use crate::vocab::Vocabulary;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("model file line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("token `{0}` cannot be written: it is empty or contains whitespace")]
    BadToken(String),
    #[error("model files disagree: {0}")]
    Mismatch(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

fn write_matrix<W: Write>(m: &Array2<f64>, vocab: &Vocabulary, mut w: W) -> Result<(), ModelIoError> {
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for (id, row) in m.rows().into_iter().enumerate() {
        let token = vocab.token(id);
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(ModelIoError::BadToken(token.to_string()));
        }
        write!(w, "{token}")?;
        for &v in row {
            if v == 0.0 || (1e-5..1e16).contains(&v.abs()) {
                write!(w, " {v}")?;
            } else {
                write!(w, " {v:e}")?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn read_matrix<R: BufRead>(r: R) -> Result<(Vec<String>, Array2<f64>), ModelIoError> {
    let mut lines = r.lines();
    let malformed = |line: usize, message: String| ModelIoError::Malformed { line, message };
    let header = lines.next().ok_or_else(|| malformed(1, "missing header".into()))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| malformed(1, format!("bad header: {e}")))?;
    let [v, d] = dims[..] else {
        return Err(malformed(1, "header must be `V d`".into()));
    };
    let mut tokens = Vec::with_capacity(v);
    let mut data = Vec::with_capacity(v * d);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        if tokens.len() == v {
            return Err(malformed(lineno, format!("more than {v} rows")));
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap_or_default().to_string();
        let before = data.len();
        for f in fields {
            let x: f64 = f.parse().map_err(|e| malformed(lineno, format!("bad value `{f}`: {e}")))?;
            if !x.is_finite() {
                return Err(malformed(lineno, format!("non-finite value `{f}`")));
            }
            data.push(x);
        }
        if data.len() - before != d {
            return Err(malformed(lineno, format!("expected {d} values, found {}", data.len() - before)));
        }
        tokens.push(token);
    }
    if tokens.len() != v {
        return Err(malformed(tokens.len() + 2, format!("expected {v} rows, found {}", tokens.len())));
    }
    let m = Array2::from_shape_vec((v, d), data).expect("shape checked");
    Ok((tokens, m))
}

/// Writes the input (embedding) matrix.
pub fn save_model<W: Write>(model: &EmbeddingModel, w: W) -> Result<(), ModelIoError> {
    write_matrix(&model.input, &model.vocab, w)
}

pub fn save_output_matrix<W: Write>(model: &EmbeddingModel, w: W) -> Result<(), ModelIoError> {
    write_matrix(&model.output, &model.vocab, w)
}

/// Reads an embedding file. The output matrix is zero and the vocabulary
/// frequencies are zero; use [`load_output_matrix`] and
/// [`EmbeddingModel::with_vocabulary`] to restore them.
pub fn load_model<R: BufRead>(r: R) -> Result<EmbeddingModel, ModelIoError> {
    let (tokens, input) = read_matrix(r)?;
    let mut seen = std::collections::HashSet::new();
    for (i, t) in tokens.iter().enumerate() {
        if !seen.insert(t.as_str()) {
            return Err(ModelIoError::Malformed { line: i + 2, message: format!("duplicate token `{t}`") });
        }
    }
    let vocab = Vocabulary::from_ordered(tokens.into_iter().map(|t| (t, 0)).collect(), 0);
    let output = Array2::zeros(input.dim());
    Ok(EmbeddingModel::from_parts(input, output, vocab))
}

/// Reads an output matrix written by [`save_output_matrix`] into `model`.
pub fn load_output_matrix<R: BufRead>(model: &mut EmbeddingModel, r: R) -> Result<(), ModelIoError> {
    let (tokens, output) = read_matrix(r)?;
    if output.dim() != model.input.dim() {
        return Err(ModelIoError::Mismatch(format!(
            "output matrix is {:?}, input is {:?}",
            output.dim(),
            model.input.dim()
        )));
    }
    if tokens != model.vocab.tokens() {
        return Err(ModelIoError::Mismatch("token order differs".into()));
    }
    model.output = output;
    Ok(())
}

impl EmbeddingModel {
    /// Replaces the vocabulary with one holding the same tokens in the same
    /// order, e.g. a vocabulary dump carrying frequencies.
    pub fn with_vocabulary(mut self, vocab: Vocabulary) -> Result<Self, ModelIoError> {
        if vocab.tokens() != self.vocab.tokens() {
            return Err(ModelIoError::Mismatch("vocabulary tokens differ from model rows".into()));
        }
        self.vocab = vocab;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> EmbeddingModel {
        let vocab = Vocabulary::from_counts([("spill", 3), ("pad", 2)], 5);
        EmbeddingModel::from_parts(
            array![[0.1, -1e-300], [1.0 / 3.0, 2.5e10]],
            array![[0.0, 7.0], [-0.25, f64::MIN_POSITIVE]],
            vocab,
        )
    }

    #[test]
    fn round_trip_is_exact() {
        let m = sample();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        save_model(&m, &mut a).unwrap();
        save_output_matrix(&m, &mut b).unwrap();
        let mut back = load_model(&a[..]).unwrap();
        load_output_matrix(&mut back, &b[..]).unwrap();
        let back = back.with_vocabulary(m.vocab.clone()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn header_format() {
        let mut a = Vec::new();
        save_model(&sample(), &mut a).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("2 2\nspill 0.1 -1e-300\n"));
    }

    #[test]
    fn malformed_inputs() {
        for bad in
            ["", "2\n", "1 2\na 1\n", "1 1\na x\n", "1 1\na 1\nb 2\n", "2 1\na 1\na 2\n", "1 1\na NaN\n"]
        {
            assert!(load_model(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn mismatched_output() {
        let mut m = load_model("1 1\na 1\n".as_bytes()).unwrap();
        assert!(load_output_matrix(&mut m, "1 1\nb 1\n".as_bytes()).is_err());
        assert!(load_output_matrix(&mut m, "1 2\na 1 2\n".as_bytes()).is_err());
    }
}
