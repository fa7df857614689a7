//! Generic HTTP embedding client with write-through caching.
//!
//! Protocol: `POST <endpoint>/embed`, body `{"texts": [string, ...]}`,
//! response `{"embeddings": [[float, ...], ...]}`, order-preserving.

use serde::{Deserialize, Serialize};

use crate::embeddings::cache::EmbeddingCache;
use crate::error::{Error, Result};
use crate::lm::RemoteBackend;

#[derive(Debug, Clone)]
pub struct ExternalEmbedder {
    pub backend: RemoteBackend,
    pub dim: usize,
    pub max_batch: usize,
    pub cache: Option<EmbeddingCache>,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

impl ExternalEmbedder {
    pub fn new(backend: RemoteBackend, dim: usize) -> ExternalEmbedder {
        ExternalEmbedder {
            backend,
            dim,
            max_batch: 64,
            cache: None,
        }
    }

    pub fn with_cache(mut self, cache: EmbeddingCache) -> ExternalEmbedder {
        self.cache = Some(cache);
        self
    }

    fn fingerprint(&self) -> String {
        format!("external:{}:d{}", self.backend.endpoint, self.dim)
    }

    /// Embed a batch, reading through the cache. Returned vectors are
    /// L2-normalised and quantised to the f32 storage precision; order
    /// matches the input.
    pub fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let fingerprint = self.fingerprint();
        let mut out: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
        let mut misses: Vec<usize> = Vec::new();
        for (i, text) in texts.iter().enumerate() {
            if let Some(cache) = &self.cache {
                let key = EmbeddingCache::key(&fingerprint, text);
                if let Some(v) = cache.get(&key)? {
                    out[i] = Some(v);
                    continue;
                }
            }
            misses.push(i);
        }
        for chunk in misses.chunks(self.max_batch.max(1)) {
            let batch: Vec<&str> = chunk.iter().map(|&i| texts[i]).collect();
            let vectors = self.fetch(&batch)?;
            for (&i, v) in chunk.iter().zip(vectors) {
                if let Some(cache) = &self.cache {
                    let key = EmbeddingCache::key(&fingerprint, texts[i]);
                    cache.put(&key, &v)?;
                }
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(Option::unwrap).collect())
    }

    fn fetch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>> {
        let expected_dim = self.dim;
        let expected_count = texts.len();
        self.backend
            .post_json("/embed", &EmbedRequest { texts }, move |body| {
                let resp: EmbedResponse =
                    serde_json::from_str(&body).map_err(|e| Error::Format(e.to_string()))?;
                if resp.embeddings.len() != expected_count {
                    return Err(Error::ShapeMismatch {
                        got: resp.embeddings.len(),
                        expected: expected_count,
                    });
                }
                let mut out = Vec::with_capacity(resp.embeddings.len());
                for mut v in resp.embeddings {
                    if v.len() != expected_dim {
                        return Err(Error::ShapeMismatch {
                            got: v.len(),
                            expected: expected_dim,
                        });
                    }
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::NonFiniteEmbedding);
                    }
                    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm == 0.0 {
                        return Err(Error::ZeroEmbedding);
                    }
                    for x in &mut v {
                        *x = (*x / norm) as f32 as f64;
                    }
                    out.push(v);
                }
                Ok(out)
            })
    }
}
