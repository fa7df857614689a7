//! Per-token log-score vectors.

use crate::error::{Error, Result};
use crate::lm::TokenId;

/// Unnormalised log-scores over the vocabulary. Entries are finite, with
/// `-inf` permitted only as an explicit mask; NaN is rejected everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector {
    pub scores: Vec<f64>,
}

impl LogitVector {
    pub fn new(scores: Vec<f64>) -> LogitVector {
        LogitVector { scores }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Reject NaN and +inf. `-inf` passes (explicit mask).
    pub fn validate(&self) -> Result<()> {
        for &s in &self.scores {
            if s.is_nan() || s == f64::INFINITY {
                return Err(Error::NonFiniteInput);
            }
        }
        Ok(())
    }

    pub fn check_same_len(&self, other: &LogitVector) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(())
    }

    /// Softmax over all entries; masked (`-inf`) entries get probability 0.
    /// Errors if every entry is masked.
    pub fn softmax(&self) -> Result<Vec<f64>> {
        let max = self
            .scores
            .iter()
            .copied()
            .filter(|s| s.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::AllMasked);
        }
        let mut probs: Vec<f64> = self
            .scores
            .iter()
            .map(|&s| if s.is_finite() { (s - max).exp() } else { 0.0 })
            .collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        Ok(probs)
    }

    /// Argmax with ties broken toward the lower token id.
    pub fn argmax(&self) -> Result<TokenId> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &s) in self.scores.iter().enumerate() {
            if !s.is_finite() {
                continue;
            }
            match best {
                Some((_, b)) if s <= b => {}
                _ => best = Some((i, s)),
            }
        }
        best.map(|(i, _)| TokenId(i as u32)).ok_or(Error::AllMasked)
    }
}
