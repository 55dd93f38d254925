//! Synthetic corpora with known co-occurrence structure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::preprocess::TokenStream;
use crate::similarity::{cosine, VectorSource};
use crate::skipgram::EmbeddingModel;

pub const CLUSTER_A: [&str; 3] = ["a", "b", "c"];
pub const CLUSTER_B: [&str; 3] = ["x", "y", "z"];

/// Sentences of `sentence_len` tokens, each drawn uniformly from one of the
/// two clusters, totalling `total_tokens` tokens.
pub fn two_cluster_corpus(seed: u64, total_tokens: usize, sentence_len: usize) -> Vec<TokenStream> {
    assert!(sentence_len > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut remaining = total_tokens;
    while remaining > 0 {
        let len = sentence_len.min(remaining);
        let cluster = if rng.gen::<bool>() { &CLUSTER_A } else { &CLUSTER_B };
        let tokens = (0..len).map(|_| cluster.choose(&mut rng).expect("non-empty").to_string()).collect();
        out.push(TokenStream::new(tokens));
        remaining -= len;
    }
    out
}

/// Mean within-cluster and mean cross-cluster cosine of the six cluster
/// tokens. Panics if a token is missing from the model.
pub fn cluster_separation(model: &EmbeddingModel) -> (f64, f64) {
    let v = |t: &str| VectorSource::Input.vector(model, model.vocab.id(t).expect("cluster token"));
    let cos = |a: &str, b: &str| cosine(v(a).view(), v(b).view()).expect("non-zero vectors");
    let mut intra = Vec::new();
    for cluster in [&CLUSTER_A, &CLUSTER_B] {
        for i in 0..3 {
            for j in i + 1..3 {
                intra.push(cos(cluster[i], cluster[j]));
            }
        }
    }
    let mut inter = Vec::new();
    for a in CLUSTER_A {
        for b in CLUSTER_B {
            inter.push(cos(a, b));
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    (mean(&intra), mean(&inter))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_shape() {
        let c = two_cluster_corpus(7, 105, 20);
        assert_eq!(c.iter().map(|s| s.len()).sum::<usize>(), 105);
        assert_eq!(c.len(), 6);
        for s in &c {
            let in_a = s.tokens.iter().all(|t| CLUSTER_A.contains(&t.as_str()));
            let in_b = s.tokens.iter().all(|t| CLUSTER_B.contains(&t.as_str()));
            assert!(in_a || in_b);
        }
        assert_eq!(c, two_cluster_corpus(7, 105, 20));
    }
}
