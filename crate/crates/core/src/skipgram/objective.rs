//! Losses, analytic gradients and single SGD steps for both objectives.
//!
//! With `h = input[center]` and `u_j = output[j]`:
//!
//! * full softmax: `L = logsumexp_j(h . u_j) - h . u_context`
//! * negative sampling:
//!   `L = -log s(h . u_context) - sum_n log s(-h . u_n)` with `s` the logistic
//!   function.

use std::collections::BTreeMap;

use ndarray::{Array1, ArrayView1};

use super::{EmbeddingModel, TrainingPair};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(sigmoid(x))` without overflow for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn scores(model: &EmbeddingModel, center: usize) -> Array1<f64> {
    model.output.dot(&model.input.row(center))
}

/// Softmax over the vocabulary of the output scores for `center`.
pub fn softmax_distribution(model: &EmbeddingModel, center: usize) -> Vec<f64> {
    let s = scores(model, center);
    softmax(s.view())
}

fn softmax(s: ArrayView1<'_, f64>) -> Vec<f64> {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(s: ArrayView1<'_, f64>) -> f64 {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Gradient of a single-pair loss. Only `input[center]` and the listed
/// output rows have non-zero gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub center: usize,
    pub input: Array1<f64>,
    /// (row id, gradient) sorted by row id, one entry per row.
    pub output: Vec<(usize, Array1<f64>)>,
}

pub fn full_softmax_loss(model: &EmbeddingModel, pair: TrainingPair) -> f64 {
    let s = scores(model, pair.center);
    log_sum_exp(s.view()) - s[pair.context]
}

pub fn full_softmax_gradient(model: &EmbeddingModel, pair: TrainingPair) -> (f64, Gradient) {
    let h = model.input.row(pair.center);
    let s = scores(model, pair.center);
    let loss = log_sum_exp(s.view()) - s[pair.context];
    let mut err = Array1::from(softmax(s.view()));
    err[pair.context] -= 1.0;
    let input = model.output.t().dot(&err);
    let output = err.iter().enumerate().map(|(j, e)| (j, &h * *e)).collect();
    (loss, Gradient { center: pair.center, input, output })
}

/// One SGD step on the full-softmax loss. Returns the loss before the step.
pub fn step_full_softmax(model: &mut EmbeddingModel, pair: TrainingPair, lr: f64) -> f64 {
    let h = model.input.row(pair.center).to_owned();
    let s = model.output.dot(&h);
    let loss = log_sum_exp(s.view()) - s[pair.context];
    let mut err = Array1::from(softmax(s.view()));
    err[pair.context] -= 1.0;
    let grad_h = model.output.t().dot(&err);
    for (j, e) in err.iter().enumerate() {
        model.output.row_mut(j).scaled_add(-lr * e, &h);
    }
    model.input.row_mut(pair.center).scaled_add(-lr, &grad_h);
    loss
}

pub fn negative_sampling_loss(model: &EmbeddingModel, pair: TrainingPair, negatives: &[usize]) -> f64 {
    let h = model.input.row(pair.center);
    let mut loss = -log_sigmoid(h.dot(&model.output.row(pair.context)));
    for &n in negatives {
        loss -= log_sigmoid(-h.dot(&model.output.row(n)));
    }
    loss
}

/// Per-target logistic errors `s(h . u_t) - label`, context first.
fn logistic_errors(
    model: &EmbeddingModel,
    h: ArrayView1<'_, f64>,
    pair: TrainingPair,
    negatives: &[usize],
) -> (f64, Vec<(usize, f64)>) {
    let mut loss = 0.0;
    let mut errs = Vec::with_capacity(negatives.len() + 1);
    let x = h.dot(&model.output.row(pair.context));
    loss -= log_sigmoid(x);
    errs.push((pair.context, sigmoid(x) - 1.0));
    for &n in negatives {
        let x = h.dot(&model.output.row(n));
        loss -= log_sigmoid(-x);
        errs.push((n, sigmoid(x)));
    }
    (loss, errs)
}

pub fn negative_sampling_gradient(
    model: &EmbeddingModel,
    pair: TrainingPair,
    negatives: &[usize],
) -> (f64, Gradient) {
    let h = model.input.row(pair.center);
    let (loss, errs) = logistic_errors(model, h, pair, negatives);
    let mut input = Array1::zeros(model.dimension());
    let mut output: BTreeMap<usize, Array1<f64>> = BTreeMap::new();
    for &(t, g) in &errs {
        input.scaled_add(g, &model.output.row(t));
        output.entry(t).or_insert_with(|| Array1::zeros(model.dimension())).scaled_add(g, &h);
    }
    (loss, Gradient { center: pair.center, input, output: output.into_iter().collect() })
}

/// One SGD step on the negative-sampling loss. All gradients are taken at
/// the pre-step parameters, so repeated negatives accumulate exactly.
/// Returns the loss before the step.
pub fn step_negative_sampling(
    model: &mut EmbeddingModel,
    pair: TrainingPair,
    negatives: &[usize],
    lr: f64,
) -> f64 {
    let h = model.input.row(pair.center).to_owned();
    let (loss, errs) = logistic_errors(model, h.view(), pair, negatives);
    let mut grad_h = Array1::zeros(h.len());
    for &(t, g) in &errs {
        grad_h.scaled_add(g, &model.output.row(t));
    }
    for &(t, g) in &errs {
        model.output.row_mut(t).scaled_add(-lr * g, &h);
    }
    model.input.row_mut(pair.center).scaled_add(-lr, &grad_h);
    loss
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::Vocabulary;
    use ndarray::{array, Array2};

    fn model(input: Array2<f64>, output: Array2<f64>) -> EmbeddingModel {
        let v = input.nrows();
        let vocab = Vocabulary::from_counts((0..v).map(|i| (format!("t{i}"), 1)), v as u64);
        EmbeddingModel::from_parts(input, output, vocab)
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = model(Array2::zeros((4, 3)), Array2::zeros((4, 3)));
        let p = softmax_distribution(&m, 2);
        assert!(p.iter().all(|x| (*x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn two_word_softmax() {
        // scores (0, ln 3) for center 0
        let m = model(array![[1.0], [0.0]], array![[0.0], [3f64.ln()]]);
        let p = softmax_distribution(&m, 0);
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn softmax_survives_huge_scores() {
        let m = model(array![[1000.0], [0.0]], array![[1.0], [-1.0]]);
        let p = softmax_distribution(&m, 0);
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_helpers() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(-800.0).is_finite());
        assert!(log_sigmoid(800.0) == 0.0);
        assert!((sigmoid(-3.0) + sigmoid(3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rate_steps_leave_model_unchanged() {
        let mut m = model(
            array![[0.1, -0.2], [0.3, 0.4], [-0.5, 0.6]],
            array![[0.2, 0.1], [-0.3, 0.2], [0.05, -0.4]],
        );
        let before = m.clone();
        let pair = TrainingPair { center: 0, context: 2 };
        step_full_softmax(&mut m, pair, 0.0);
        assert_eq!(m, before);
        step_negative_sampling(&mut m, pair, &[1, 1], 0.0);
        assert_eq!(m, before);
    }

    #[test]
    fn steps_apply_the_reported_gradient() {
        let base = model(
            array![[0.1, -0.2], [0.3, 0.4], [-0.5, 0.6]],
            array![[0.2, 0.1], [-0.3, 0.2], [0.05, -0.4]],
        );
        let pair = TrainingPair { center: 1, context: 0 };
        let lr = 0.1;
        let check = |after: &EmbeddingModel, grad: &Gradient| {
            let expect_in = &base.input.row(grad.center) - &(&grad.input * lr);
            assert!(after
                .input
                .row(grad.center)
                .iter()
                .zip(expect_in.iter())
                .all(|(a, b)| (a - b).abs() < 1e-15));
            for (j, g) in &grad.output {
                let expect = &base.output.row(*j) - &(g * lr);
                assert!(after.output.row(*j).iter().zip(expect.iter()).all(|(a, b)| (a - b).abs() < 1e-15));
            }
        };

        let mut m = base.clone();
        let loss = step_full_softmax(&mut m, pair, lr);
        let (l2, g) = full_softmax_gradient(&base, pair);
        assert_eq!(loss, l2);
        check(&m, &g);

        let mut m = base.clone();
        let negs = [2, 2, 1];
        let loss = step_negative_sampling(&mut m, pair, &negs, lr);
        let (l2, g) = negative_sampling_gradient(&base, pair, &negs);
        assert_eq!(loss, l2);
        assert_eq!(g.output.len(), 3);
        check(&m, &g);
    }

    #[test]
    fn small_step_decreases_loss() {
        let base = model(
            array![[0.1, -0.2], [0.3, 0.4], [-0.5, 0.6]],
            array![[0.2, 0.1], [-0.3, 0.2], [0.05, -0.4]],
        );
        let pair = TrainingPair { center: 2, context: 1 };
        let mut m = base.clone();
        let before = step_full_softmax(&mut m, pair, 1e-3);
        assert!(full_softmax_loss(&m, pair) < before);

        let mut m = base.clone();
        let before = step_negative_sampling(&mut m, pair, &[0], 1e-3);
        assert!(negative_sampling_loss(&m, pair, &[0]) < before);
    }
}
