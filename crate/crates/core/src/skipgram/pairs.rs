use rand::Rng;

use super::WindowMode;
use crate::preprocess::TokenStream;
use crate::vocab::Vocabulary;

/// A (center, context) id pair taken from two distinct positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrainingPair {
    pub center: usize,
    pub context: usize,
}

/// Maps a token stream to vocabulary ids, dropping out-of-vocabulary tokens.
pub fn encode_stream(stream: &TokenStream, vocab: &Vocabulary) -> Vec<usize> {
    stream.tokens.iter().filter_map(|t| vocab.id(t)).collect()
}

/// Every (center, context) pair of `ids`. With [`WindowMode::Dynamic`] each
/// position draws its own window `b` uniformly from `1..=window`.
pub fn generate_pairs<R: Rng>(
    ids: &[usize],
    window: usize,
    mode: WindowMode,
    rng: &mut R,
) -> Vec<TrainingPair> {
    let mut out = Vec::new();
    for_each_pair(ids, window, mode, rng, |p| out.push(p));
    out
}

pub(crate) fn for_each_pair<R: Rng, F: FnMut(TrainingPair)>(
    ids: &[usize],
    window: usize,
    mode: WindowMode,
    rng: &mut R,
    mut f: F,
) {
    if ids.len() < 2 {
        return;
    }
    for (i, &center) in ids.iter().enumerate() {
        let b = match mode {
            WindowMode::Fixed => window,
            WindowMode::Dynamic => rng.gen_range(1..=window),
        };
        let lo = i.saturating_sub(b);
        let hi = (i + b).min(ids.len() - 1);
        for (j, &context) in ids.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                f(TrainingPair { center, context });
            }
        }
    }
}
