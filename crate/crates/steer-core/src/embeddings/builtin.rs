//! Deterministic hashing embedder.
//!
//! Character n-grams in a configurable range are hashed into `dim` buckets
//! with a seeded FNV-1a variant; bucket weight is `ln(1 + count)`, times an
//! optional IDF factor, then L2-normalised. No learned weights, so the
//! metric suite has zero model dependencies.
//!
//! Output components are quantised to f32 as a final step: that is the
//! cache storage precision, and quantising here keeps cached and freshly
//! computed vectors bit-identical.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedderConfig {
    /// Inclusive character n-gram range; 1 <= low <= high <= 5.
    pub ngram_low: usize,
    pub ngram_high: usize,
    pub dim: usize,
    pub hash_seed: u64,
    /// Optional per-bucket IDF table fit from a reference corpus.
    pub idf: Option<Vec<f64>>,
}

impl Default for EmbedderConfig {
    fn default() -> EmbedderConfig {
        EmbedderConfig {
            ngram_low: 1,
            ngram_high: 3,
            dim: 256,
            hash_seed: 0x5745_4252_4544_4d45,
            idf: None,
        }
    }
}

impl EmbedderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ngram_low < 1 || self.ngram_low > self.ngram_high || self.ngram_high > 5 {
            return Err(Error::Config(
                "ngram range must satisfy 1 <= low <= high <= 5".into(),
            ));
        }
        if self.dim < 8 {
            return Err(Error::Config("embedding dimension must be >= 8".into()));
        }
        if let Some(idf) = &self.idf {
            if idf.len() != self.dim {
                return Err(Error::Config("idf table length must equal dim".into()));
            }
        }
        Ok(())
    }

    /// Stable identity of this configuration, used in cache keys.
    pub fn fingerprint(&self) -> String {
        let idf_tag = match &self.idf {
            None => "none".to_string(),
            Some(t) => format!(
                "{:016x}",
                t.iter()
                    .fold(0u64, |acc, v| fnv1a(acc, &v.to_bits().to_le_bytes()))
            ),
        };
        format!(
            "builtin:n{}-{}:d{}:s{:016x}:idf{}",
            self.ngram_low, self.ngram_high, self.dim, self.hash_seed, idf_tag
        )
    }
}

/// Seeded FNV-1a over bytes.
fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Bucket index for one n-gram.
pub(crate) fn bucket_of(ngram: &str, config: &EmbedderConfig) -> usize {
    (fnv1a(config.hash_seed, ngram.as_bytes()) % config.dim as u64) as usize
}

fn bucket_counts(text: &str, config: &EmbedderConfig) -> HashMap<usize, u64> {
    let chars: Vec<char> = text.chars().collect();
    let mut counts: HashMap<usize, u64> = HashMap::new();
    let mut buf = String::new();
    for n in config.ngram_low..=config.ngram_high {
        if chars.len() < n {
            continue;
        }
        for w in chars.windows(n) {
            buf.clear();
            buf.extend(w.iter());
            *counts.entry(bucket_of(&buf, config)).or_insert(0) += 1;
        }
    }
    counts
}

/// Embed one text. Pure function of `(text, config)`.
pub fn embed_builtin(text: &str, config: &EmbedderConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(Error::EmptyText);
    }
    let mut values = vec![0.0f64; config.dim];
    for (bucket, count) in bucket_counts(trimmed, config) {
        let mut w = (1.0 + count as f64).ln();
        if let Some(idf) = &config.idf {
            w *= idf[bucket];
        }
        values[bucket] = w;
    }
    let norm: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroEmbedding);
    }
    for v in &mut values {
        *v = (*v / norm) as f32 as f64;
    }
    Ok(values)
}

/// Fit a per-bucket IDF table: `ln((1 + N) / (1 + df)) + 1`.
pub fn fit_idf(corpus: &[String], config: &EmbedderConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut df = vec![0u64; config.dim];
    for text in corpus {
        for bucket in bucket_counts(text.trim(), config).keys() {
            df[*bucket] += 1;
        }
    }
    let n = corpus.len() as f64;
    Ok(df
        .into_iter()
        .map(|d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect())
}

/// Arithmetic mean of a set of vectors. Deliberately not renormalised; the
/// cosine formula downstream does its own normalisation.
pub fn mean_embedding(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    if vectors.is_empty() {
        return Err(Error::EmptySet);
    }
    let dim = vectors[0].len();
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= vectors.len() as f64;
    }
    Ok(mean)
}
