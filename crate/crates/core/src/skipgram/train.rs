use log::info;
use ndarray::Array2;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objective::{step_full_softmax, step_negative_sampling};
use super::pairs::{encode_stream, for_each_pair, TrainingPair};
use super::{EmbeddingModel, Objective, TrainError, TrainingConfig};
use crate::preprocess::TokenStream;
use crate::vocab::Vocabulary;

/// Exponent applied to unigram counts for the negative-sampling noise.
pub const NOISE_POWER: f64 = 0.75;

/// Unigram counts raised to [`NOISE_POWER`], normalized.
#[derive(Debug, Clone)]
pub struct NoiseDistribution {
    weights: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl NoiseDistribution {
    pub fn from_counts(counts: &[u64]) -> Self {
        let mut weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(NOISE_POWER)).collect();
        if weights.iter().all(|w| *w == 0.0) {
            weights = vec![1.0; counts.len()];
        }
        let index = WeightedIndex::new(&weights).expect("positive noise weights");
        NoiseDistribution { weights, index }
    }

    pub fn probability(&self, id: usize) -> f64 {
        self.weights[id] / self.weights.iter().sum::<f64>()
    }

    /// Draws `k` ids, none equal to `exclude`. Returns nothing when every
    /// other id has zero weight.
    pub fn sample_excluding<R: Rng>(&self, rng: &mut R, exclude: usize, k: usize, out: &mut Vec<usize>) {
        out.clear();
        let others: f64 =
            self.weights.iter().enumerate().filter(|(i, _)| *i != exclude).map(|(_, w)| w).sum();
        if others <= 0.0 {
            return;
        }
        while out.len() < k {
            let id = self.index.sample(rng);
            if id != exclude {
                out.push(id);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Mean pre-step pair loss for each epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: Vec<u64>,
}

impl TrainingReport {
    pub fn total_pairs(&self) -> u64 {
        self.pairs_per_epoch.iter().sum()
    }
}

const INIT_STREAM: u64 = 0;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn plan_stream(epoch: usize) -> u64 {
    1 + 2 * epoch as u64
}

fn negative_stream(epoch: usize) -> u64 {
    2 + 2 * epoch as u64
}

struct Corpus<'a> {
    docs: Vec<Vec<usize>>,
    keep_prob: Option<Vec<f64>>,
    config: &'a TrainingConfig,
}

impl Corpus<'_> {
    /// Visits the pairs of one epoch in training order. Shuffling,
    /// subsampling and window draws all come from the epoch's plan stream, so
    /// the sequence depends only on (seed, epoch).
    fn for_each_pair<F: FnMut(TrainingPair)>(&self, epoch: usize, mut f: F) {
        let mut rng = rng_for(self.config.seed, plan_stream(epoch));
        let mut order: Vec<usize> = (0..self.docs.len()).collect();
        if self.config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut kept = Vec::new();
        for idx in order {
            let ids: &[usize] = match &self.keep_prob {
                None => &self.docs[idx],
                Some(p) => {
                    kept.clear();
                    for &id in &self.docs[idx] {
                        if rng.gen::<f64>() < p[id] {
                            kept.push(id);
                        }
                    }
                    &kept
                }
            };
            for_each_pair(ids, self.config.window, self.config.window_mode, &mut rng, &mut f);
        }
    }

    fn count_pairs(&self, epoch: usize) -> u64 {
        let mut n = 0;
        self.for_each_pair(epoch, |_| n += 1);
        n
    }
}

fn subsample_keep_probabilities(vocab: &Vocabulary, t: f64) -> Vec<f64> {
    let total: u64 = vocab.kept_token_count();
    vocab
        .counts()
        .iter()
        .map(|&c| {
            let f = c as f64 / total as f64;
            (((f / t).sqrt() + 1.0) * t / f).min(1.0)
        })
        .collect()
}

/// Trains a skip-gram model on `streams`. Out-of-vocabulary tokens are
/// dropped before pairing. Single-threaded and bit-reproducible for a fixed
/// (corpus, vocabulary, config).
pub fn train(
    streams: &[TokenStream],
    vocab: &Vocabulary,
    config: &TrainingConfig,
) -> Result<(EmbeddingModel, TrainingReport), TrainError> {
    config.validate()?;
    let docs: Vec<Vec<usize>> = streams.iter().map(|s| encode_stream(s, vocab)).collect();
    if vocab.is_empty() || docs.iter().all(|d| d.is_empty()) {
        return Err(TrainError::EmptyCorpus);
    }

    let v = vocab.len();
    let d = config.dimension;
    let mut init_rng = rng_for(config.seed, INIT_STREAM);
    let bound = 0.5 / d as f64;
    let input = Array2::from_shape_simple_fn((v, d), || init_rng.gen_range(-bound..=bound));
    let mut model = EmbeddingModel {
        input,
        output: Array2::zeros((v, d)),
        vocab: vocab.clone(),
        config: Some(config.clone()),
    };

    let corpus = Corpus {
        docs,
        keep_prob: (config.subsample > 0.0).then(|| subsample_keep_probabilities(vocab, config.subsample)),
        config,
    };
    let pairs_per_epoch: Vec<u64> = (0..config.epochs).map(|e| corpus.count_pairs(e)).collect();
    let total: u64 = pairs_per_epoch.iter().sum();
    let noise = NoiseDistribution::from_counts(vocab.counts());
    let lr_span = config.learning_rate - config.min_learning_rate;

    let mut done: u64 = 0;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut negatives = Vec::with_capacity(config.negatives);
    let mut failure: Option<TrainError> = None;
    let mut window_loss = 0.0;
    let mut window_pairs = 0u64;

    for epoch in 0..config.epochs {
        let mut neg_rng = rng_for(config.seed, negative_stream(epoch));
        let mut epoch_loss = 0.0;
        let mut epoch_pairs = 0u64;
        corpus.for_each_pair(epoch, |pair| {
            if failure.is_some() {
                return;
            }
            let lr = config.learning_rate - lr_span * (done as f64 / total as f64);
            let loss = match config.objective {
                Objective::FullSoftmax => step_full_softmax(&mut model, pair, lr),
                Objective::NegativeSampling => {
                    noise.sample_excluding(&mut neg_rng, pair.context, config.negatives, &mut negatives);
                    step_negative_sampling(&mut model, pair, &negatives, lr)
                }
            };
            done += 1;
            if !loss.is_finite() || !touched_rows_finite(&model, pair, &negatives, config.objective) {
                failure = Some(TrainError::NonFinite {
                    step: done,
                    center: vocab.token(pair.center).to_string(),
                    context: vocab.token(pair.context).to_string(),
                });
                return;
            }
            epoch_loss += loss;
            epoch_pairs += 1;
            window_loss += loss;
            window_pairs += 1;
            if config.log_interval > 0 && done.is_multiple_of(config.log_interval) {
                info!("pairs {done}/{total} lr {lr:.6} loss {:.5}", window_loss / window_pairs as f64);
                window_loss = 0.0;
                window_pairs = 0;
            }
        });
        if let Some(err) = failure {
            return Err(err);
        }
        epoch_losses.push(if epoch_pairs == 0 { 0.0 } else { epoch_loss / epoch_pairs as f64 });
        if config.log_interval > 0 {
            info!("epoch {} mean loss {:.5}", epoch + 1, epoch_losses[epoch]);
        }
    }

    Ok((model, TrainingReport { epoch_losses, pairs_per_epoch }))
}

fn touched_rows_finite(
    model: &EmbeddingModel,
    pair: TrainingPair,
    negatives: &[usize],
    objective: Objective,
) -> bool {
    let row_ok = |m: &Array2<f64>, i: usize| m.row(i).iter().all(|x| x.is_finite());
    if !row_ok(&model.input, pair.center) {
        return false;
    }
    match objective {
        Objective::FullSoftmax => model.output.iter().all(|x| x.is_finite()),
        Objective::NegativeSampling => {
            row_ok(&model.output, pair.context) && negatives.iter().all(|&n| row_ok(&model.output, n))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skipgram::WindowMode;
    use crate::vocab::build_vocabulary;

    fn streams(docs: &[&str]) -> Vec<TokenStream> {
        docs.iter().map(|d| TokenStream::new(d.split_whitespace().map(String::from).collect())).collect()
    }

    fn small_config() -> TrainingConfig {
        TrainingConfig { dimension: 8, window: 2, epochs: 3, log_interval: 0, ..Default::default() }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = streams(&["a b c a b", "x y z x", "a c b"]);
        let vocab = build_vocabulary(&s, 1).unwrap();
        let cfg = TrainingConfig { shuffle: true, subsample: 0.2, ..small_config() };
        let (m1, r1) = train(&s, &vocab, &cfg).unwrap();
        let (m2, r2) = train(&s, &vocab, &cfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(r1, r2);
        let (m3, _) = train(&s, &vocab, &TrainingConfig { seed: 2, ..cfg }).unwrap();
        assert_ne!(m1.input, m3.input);
    }

    #[test]
    fn initialization_ranges() {
        let s = streams(&["a"]);
        let vocab = build_vocabulary(&s, 1).unwrap();
        let cfg = small_config();
        let (m, r) = train(&s, &vocab, &cfg).unwrap();
        assert_eq!(r.total_pairs(), 0);
        assert!(m.input.iter().all(|x| x.abs() <= 0.5 / 8.0));
        assert!(m.output.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn single_repeated_token_stays_finite() {
        let s = streams(&["w w w w w w w w w w"]);
        let vocab = build_vocabulary(&s, 1).unwrap();
        for objective in [Objective::NegativeSampling, Objective::FullSoftmax] {
            let (m, r) = train(&s, &vocab, &TrainingConfig { objective, ..small_config() }).unwrap();
            assert!(r.total_pairs() > 0);
            assert!(m.is_finite());
        }
    }

    #[test]
    fn empty_corpus_errors() {
        let vocab = Vocabulary::from_counts([("a", 1)], 1);
        let s = streams(&["zz yy"]);
        assert!(matches!(train(&s, &vocab, &small_config()), Err(TrainError::EmptyCorpus)));
    }

    #[test]
    fn divergence_is_reported() {
        let s = streams(&["a b a b a b a b a b"]);
        let vocab = build_vocabulary(&s, 1).unwrap();
        let cfg = TrainingConfig {
            learning_rate: 1e300,
            min_learning_rate: 1e299,
            objective: Objective::FullSoftmax,
            window_mode: WindowMode::Fixed,
            ..small_config()
        };
        match train(&s, &vocab, &cfg) {
            Err(TrainError::NonFinite { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn noise_excludes_context() {
        let noise = NoiseDistribution::from_counts(&[16, 1, 0]);
        assert!((noise.probability(0) - 8.0 / 9.0).abs() < 1e-12);
        assert_eq!(noise.probability(2), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut out = Vec::new();
        noise.sample_excluding(&mut rng, 0, 5, &mut out);
        assert_eq!(out, vec![1; 5]);
        let lone = NoiseDistribution::from_counts(&[4]);
        lone.sample_excluding(&mut rng, 0, 5, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn pair_schedule_matches_training() {
        let s = streams(&["a b c d e f", "b c d"]);
        let vocab = build_vocabulary(&s, 1).unwrap();
        let (_, r) = train(&s, &vocab, &small_config()).unwrap();
        assert_eq!(r.pairs_per_epoch.len(), 3);
        assert!(r.pairs_per_epoch.iter().all(|p| *p > 0));
    }
}
