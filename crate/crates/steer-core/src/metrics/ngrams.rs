//! Diversity metrics: normalised n-grams and the diversity score.

use std::collections::HashSet;
use std::hash::Hash;

use crate::error::{Error, Result};

/// `1 - unique/total` n-grams, pooled over the dataset. N-grams never cross
/// example boundaries; examples shorter than `n` contribute nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramScore {
    pub value: f64,
    /// True when the dataset had no n-grams at all (value forced to 0).
    pub degenerate: bool,
}

pub fn normalized_ngrams<T: Eq + Hash + Clone>(
    examples: &[Vec<T>],
    n: usize,
) -> Result<NgramScore> {
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n < 1 {
        return Err(Error::Config("n must be >= 1".into()));
    }
    let mut unique: HashSet<&[T]> = HashSet::new();
    let mut total = 0usize;
    for ex in examples {
        if ex.len() < n {
            continue;
        }
        for gram in ex.windows(n) {
            unique.insert(gram);
            total += 1;
        }
    }
    if total == 0 {
        return Ok(NgramScore {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(NgramScore {
        value: 1.0 - unique.len() as f64 / total as f64,
        degenerate: false,
    })
}

/// Product over n = 2..=4 of `(1 - normalized_ngrams(n))`.
pub fn diversity_score<T: Eq + Hash + Clone>(examples: &[Vec<T>]) -> Result<f64> {
    let mut product = 1.0;
    for n in 2..=4 {
        product *= 1.0 - normalized_ngrams(examples, n)?.value;
    }
    Ok(product)
}

/// Character-level view of a text dataset, the tokenisation used by the
/// report-level diversity metrics.
pub fn char_tokens(texts: &[String]) -> Vec<Vec<char>> {
    texts.iter().map(|t| t.chars().collect()).collect()
}
