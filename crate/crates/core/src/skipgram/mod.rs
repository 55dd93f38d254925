//! Skip-gram word embeddings trained by plain SGD.
//!
//! The model has two `V x d` matrices: `input` (the hidden-layer weights,
//! which are the word embeddings) and `output`. Training supports the full
//! softmax objective and the negative-sampling surrogate.

mod io;
mod objective;
mod pairs;
mod train;

use ndarray::{Array1, Array2, ArrayView1};
use thiserror::Error;

use crate::vocab::Vocabulary;

pub use io::{load_model, load_output_matrix, save_model, save_output_matrix, ModelIoError};
pub use objective::{
    full_softmax_gradient, full_softmax_loss, log_sigmoid, negative_sampling_gradient,
    negative_sampling_loss, sigmoid, softmax_distribution, step_full_softmax, step_negative_sampling,
    Gradient,
};
pub use pairs::{encode_stream, generate_pairs, TrainingPair};
pub use train::{train, NoiseDistribution, TrainingReport};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("empty corpus: no in-vocabulary tokens to train on")]
    EmptyCorpus,
    #[error("non-finite value at step {step} (center `{center}`, context `{context}`)")]
    NonFinite { step: u64, center: String, context: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    FullSoftmax,
    NegativeSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    /// Per-position window drawn uniformly from `1..=window`.
    Dynamic,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub dimension: usize,
    pub window: usize,
    pub window_mode: WindowMode,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub objective: Objective,
    /// Negative samples per pair (negative sampling only).
    pub negatives: usize,
    /// Frequent-word subsampling threshold; 0 disables it.
    pub subsample: f64,
    /// Shuffle document order each epoch.
    pub shuffle: bool,
    pub seed: u64,
    /// Progress log period in pairs; 0 disables logging.
    pub log_interval: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dimension: 100,
            window: 5,
            window_mode: WindowMode::Dynamic,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 2.5e-6,
            objective: Objective::NegativeSampling,
            negatives: 5,
            subsample: 0.0,
            shuffle: false,
            seed: 1,
            log_interval: 100_000,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.dimension == 0 {
            return fail("dimension must be >= 1");
        }
        if self.window == 0 {
            return fail("window must be >= 1");
        }
        if self.epochs == 0 {
            return fail("epochs must be >= 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail("learning_rate must be a positive number");
        }
        if !(self.min_learning_rate.is_finite() && self.min_learning_rate > 0.0) {
            return fail("min_learning_rate must be a positive number");
        }
        if self.min_learning_rate >= self.learning_rate {
            return fail("min_learning_rate must be below learning_rate");
        }
        if self.objective == Objective::NegativeSampling && self.negatives == 0 {
            return fail("negatives must be >= 1 for negative sampling");
        }
        if !(self.subsample.is_finite() && self.subsample >= 0.0) {
            return fail("subsample must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    /// Hidden-layer weights; row `i` is the embedding of token id `i`.
    pub input: Array2<f64>,
    pub output: Array2<f64>,
    pub vocab: Vocabulary,
    /// Configuration the model was trained with, when known.
    pub config: Option<TrainingConfig>,
}

impl EmbeddingModel {
    /// A model with the given matrices. Panics if the shapes disagree with
    /// each other or with the vocabulary.
    pub fn from_parts(input: Array2<f64>, output: Array2<f64>, vocab: Vocabulary) -> Self {
        assert_eq!(input.dim(), output.dim(), "input/output shapes differ");
        assert_eq!(input.nrows(), vocab.len(), "row count differs from vocabulary size");
        EmbeddingModel { input, output, vocab, config: None }
    }

    pub fn vocab_size(&self) -> usize {
        self.input.nrows()
    }

    pub fn dimension(&self) -> usize {
        self.input.ncols()
    }

    pub fn embedding(&self, token: &str) -> Option<ArrayView1<'_, f64>> {
        self.vocab.id(token).map(|id| self.input.row(id))
    }

    /// Mean of the input and output rows for `id`.
    pub fn mean_vector(&self, id: usize) -> Array1<f64> {
        (&self.input.row(id) + &self.output.row(id)) * 0.5
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(self.output.iter()).all(|v| v.is_finite())
    }
}
