//! Dataset-level cosine similarity.

use crate::embeddings::mean_embedding;
use crate::error::{Error, Result};

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cosine between the mean real and mean synthetic embedding.
pub fn dataset_cosine_similarity(real: &[Vec<f64>], synth: &[Vec<f64>]) -> Result<f64> {
    let mr = mean_embedding(real)?;
    let ms = mean_embedding(synth)?;
    if mr.len() != ms.len() {
        return Err(Error::LengthMismatch(mr.len(), ms.len()));
    }
    let nr: f64 = mr.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ns: f64 = ms.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nr == 0.0 || ns == 0.0 {
        return Err(Error::ZeroMeanVector);
    }
    Ok(mr.iter().zip(&ms).map(|(x, y)| x * y).sum::<f64>() / (nr * ns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_datasets_score_one() {
        let d = vec![vec![0.5, 0.5], vec![1.0, 0.0]];
        assert!((dataset_cosine_similarity(&d, &d).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn antipodal_means_score_minus_one() {
        let a = vec![vec![1.0, 2.0]];
        let b = vec![vec![-1.0, -2.0]];
        assert!((dataset_cosine_similarity(&a, &b).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn right_angle_halfway() {
        // means (1,0) and (1,1) -> 1/sqrt(2).
        let a = vec![vec![1.0, 0.0]];
        let b = vec![vec![1.0, 1.0]];
        let c = dataset_cosine_similarity(&a, &b).unwrap();
        assert!((c - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_is_an_error() {
        let a = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let b = vec![vec![1.0, 0.0]];
        assert!(matches!(
            dataset_cosine_similarity(&a, &b),
            Err(Error::ZeroMeanVector)
        ));
    }

    #[test]
    fn empty_set_is_an_error() {
        let b = vec![vec![1.0, 0.0]];
        assert!(matches!(
            dataset_cosine_similarity(&[], &b),
            Err(Error::EmptySet)
        ));
    }
}
