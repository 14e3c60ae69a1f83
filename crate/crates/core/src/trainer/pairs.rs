//! Cross-lingual pair construction.
//!
//! Every poor-language sentence is aligned with rich-language sentences of
//! the same sentiment (label +1) and with as many, times a ratio, of a
//! different sentiment (label -1).

use alloc::vec::Vec;

use rand::seq::index;

use super::loss::PairLabel;
use crate::corpus::Dataset;
use crate::{rng, Error, Result};

/// A pair by sentence index into the poor and rich datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentencePair {
    pub poor: usize,
    pub rich: usize,
    pub label: PairLabel,
}

/// `k` draws from `pool`: without replacement while the pool lasts, then a
/// fresh permutation, and so on.
fn draw(pool: &[usize], k: usize, rng: &mut rng::Rng, out: &mut Vec<usize>) {
    let mut left = k;
    while left > 0 {
        let take = left.min(pool.len());
        out.extend(index::sample(rng, pool.len(), take).into_iter().map(|i| pool[i]));
        left -= take;
    }
}

/// Samples training pairs. For each poor sentence, in dataset order, emits
/// `positives_per_sentence` same-label pairs followed by
/// `negatives_per_positive * positives_per_sentence` different-label pairs.
/// Deterministic in `seed`.
pub fn generate_pairs(
    poor: &Dataset,
    rich: &Dataset,
    negatives_per_positive: usize,
    positives_per_sentence: usize,
    seed: u64,
) -> Result<Vec<SentencePair>> {
    if poor.is_empty() {
        return Err(Error::EmptyDataset(poor.name().into()));
    }
    if rich.is_empty() {
        return Err(Error::EmptyDataset(rich.name().into()));
    }
    if poor.scheme() != rich.scheme() {
        return Err(Error::SchemeMismatch {
            left: poor.scheme().name(),
            right: rich.scheme().name(),
        });
    }
    if negatives_per_positive == 0 {
        return Err(Error::invalid("negatives_per_positive", "must be at least 1"));
    }
    if positives_per_sentence == 0 {
        return Err(Error::invalid("positives_per_sentence", "must be at least 1"));
    }
    let classes = poor.scheme().classes();
    let same: Vec<Vec<usize>> = classes.iter().map(|&c| rich.indices_of(c)).collect();
    let other: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| {
            rich.sentences()
                .iter()
                .enumerate()
                .filter(|(_, s)| s.label != c)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let counts = poor.class_counts();
    for (ci, &class) in classes.iter().enumerate() {
        if counts[ci] > 0 && (same[ci].is_empty() || other[ci].is_empty()) {
            return Err(Error::UnsatisfiableClass(class));
        }
    }

    let negatives = negatives_per_positive * positives_per_sentence;
    let mut rng = rng::seeded(seed, 1);
    let mut out = Vec::with_capacity(poor.len() * (positives_per_sentence + negatives));
    let mut drawn = Vec::new();
    for (pi, s) in poor.sentences().iter().enumerate() {
        // Labels were validated against the scheme when the dataset was built.
        let ci = poor.scheme().index_of(s.label).unwrap_or(0);
        for (pool, k, label) in [
            (&same[ci], positives_per_sentence, PairLabel::Similar),
            (&other[ci], negatives, PairLabel::Dissimilar),
        ] {
            drawn.clear();
            draw(pool, k, &mut rng, &mut drawn);
            out.extend(drawn.iter().map(|&ri| SentencePair { poor: pi, rich: ri, label }));
        }
    }
    Ok(out)
}
