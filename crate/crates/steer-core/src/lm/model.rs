//! Cache-augmented interpolated n-gram language model.
//!
//! The conditional distribution is
//! `(1 - cache_weight) * P_ngram + cache_weight * P_cache`, where `P_ngram`
//! is add-alpha smoothed with recursive backoff across orders n..1 down to a
//! uniform base, and `P_cache` is a recency-weighted normalised count of the
//! tokens already present in the context. The cache is what makes a long
//! negative-prompt prefix genuinely shift the next-token distribution.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::logits::LogitVector;
use crate::lm::vocab::{TokenId, VocabMode, Vocabulary};

pub const DEFAULT_CONTEXT_BUDGET: usize = 2048;
const MODEL_FORMAT_VERSION: u32 = 1;

/// A token prefix plus the maximum length it may grow to.
#[derive(Debug, Clone)]
pub struct Context {
    tokens: Vec<TokenId>,
    budget: usize,
}

impl Context {
    pub fn new(tokens: Vec<TokenId>, budget: usize) -> Result<Context> {
        if tokens.len() > budget {
            return Err(Error::ContextOverflow {
                len: tokens.len(),
                budget,
            });
        }
        Ok(Context { tokens, budget })
    }

    pub fn with_default_budget(tokens: Vec<TokenId>) -> Result<Context> {
        Context::new(tokens, DEFAULT_CONTEXT_BUDGET)
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn push(&mut self, id: TokenId) -> Result<()> {
        if self.tokens.len() + 1 > self.budget {
            return Err(Error::ContextOverflow {
                len: self.tokens.len() + 1,
                budget: self.budget,
            });
        }
        self.tokens.push(id);
        Ok(())
    }
}

/// Anything that can score the next token given a context.
pub trait LogitSource {
    fn log_probs(&self, context: &Context) -> Result<LogitVector>;
    fn vocab_size(&self) -> usize;
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainParams {
    pub order: usize,
    pub smoothing_alpha: f64,
    pub cache_weight: f64,
    pub cache_decay: f64,
}

impl Default for TrainParams {
    fn default() -> TrainParams {
        TrainParams {
            order: 5,
            smoothing_alpha: 0.1,
            cache_weight: 0.3,
            cache_decay: 0.99,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct CountTable {
    counts: HashMap<TokenId, u64>,
    total: u64,
}

#[derive(Debug, Clone)]
pub struct CacheNGramModel {
    vocab: Vocabulary,
    params: TrainParams,
    /// `orders[k-1]` maps a context of length `k-1` to next-token counts.
    orders: Vec<HashMap<Vec<TokenId>, CountTable>>,
}

impl CacheNGramModel {
    /// Count n-grams over the corpus. Every example is wrapped in BOS/EOS
    /// for counting, so the model learns where sequences start and stop.
    pub fn train(corpus: &[String], vocab: Vocabulary, params: TrainParams) -> Result<CacheNGramModel> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if params.order < 1 {
            return Err(Error::Config("n-gram order must be >= 1".into()));
        }
        if params.smoothing_alpha <= 0.0 {
            return Err(Error::Config("smoothing_alpha must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&params.cache_weight) {
            return Err(Error::Config("cache_weight must lie in [0,1]".into()));
        }
        if params.cache_decay <= 0.0 || params.cache_decay > 1.0 {
            return Err(Error::Config("cache_decay must lie in (0,1]".into()));
        }
        let mut orders: Vec<HashMap<Vec<TokenId>, CountTable>> =
            vec![HashMap::new(); params.order];
        for line in corpus {
            let mut seq = vec![TokenId::BOS];
            seq.extend(vocab.tokenize(line));
            seq.push(TokenId::EOS);
            for i in 1..seq.len() {
                let target = seq[i];
                for k in 1..=params.order {
                    if i < k - 1 {
                        continue;
                    }
                    let ctx = seq[i - (k - 1)..i].to_vec();
                    let table = orders[k - 1].entry(ctx).or_default();
                    *table.counts.entry(target).or_insert(0) += 1;
                    table.total += 1;
                }
            }
        }
        Ok(CacheNGramModel {
            vocab,
            params,
            orders,
        })
    }

    /// Model with zero counts (uniform next-token distribution).
    pub fn untrained(vocab: Vocabulary, params: TrainParams) -> CacheNGramModel {
        let orders = vec![HashMap::new(); params.order.max(1)];
        CacheNGramModel {
            vocab,
            params,
            orders,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &TrainParams {
        &self.params
    }

    /// Next-token probabilities (not logged). Exposed for oracle tests.
    pub fn next_token_probs(&self, context: &[TokenId]) -> Vec<f64> {
        let v = self.vocab.len();
        let av = self.params.smoothing_alpha * v as f64;
        let mut probs = vec![1.0 / v as f64; v];
        // Recursive add-alpha backoff: at each order the smoothing mass is
        // distributed according to the next-lower-order distribution.
        let k_max = self.params.order.min(context.len() + 1);
        for k in 1..=k_max {
            let ctx_k = &context[context.len() - (k - 1)..];
            if let Some(table) = self.orders[k - 1].get(ctx_k) {
                let denom = table.total as f64 + av;
                let scale = av / denom;
                for p in &mut probs {
                    *p *= scale;
                }
                for (&tok, &count) in &table.counts {
                    probs[tok.index()] += count as f64 / denom;
                }
            }
            // Unseen context: (0 + av*p) / (0 + av) = p, i.e. pure backoff.
        }
        let lambda = self.params.cache_weight;
        if lambda > 0.0 && !context.is_empty() {
            let rho = self.params.cache_decay;
            let mut cache = vec![0.0; v];
            let mut weight = 1.0;
            let mut total = 0.0;
            for &tok in context.iter().rev() {
                cache[tok.index()] += weight;
                total += weight;
                weight *= rho;
            }
            for (p, c) in probs.iter_mut().zip(cache) {
                *p = (1.0 - lambda) * *p + lambda * c / total;
            }
        }
        probs
    }

    /// Joint log-probability of `tokens` as a sum of per-step conditionals,
    /// each conditioned on the growing prefix.
    pub fn sequence_log_prob(&self, tokens: &[TokenId]) -> f64 {
        let mut total = 0.0;
        for i in 0..tokens.len() {
            let probs = self.next_token_probs(&tokens[..i]);
            total += probs[tokens[i].index()].ln();
        }
        total
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile::from_model(self);
        let json = serde_json::to_vec(&file).map_err(|e| Error::Format(e.to_string()))?;
        let gz = path
            .extension()
            .map(|e| e == "gz")
            .unwrap_or(false);
        let bytes = if gz {
            let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
            enc.write_all(&json)?;
            enc.finish()?
        } else {
            json
        };
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CacheNGramModel> {
        let raw = std::fs::read(path)?;
        let json = if raw.starts_with(&[0x1f, 0x8b]) {
            let mut dec = flate2::read::GzDecoder::new(&raw[..]);
            let mut out = Vec::new();
            dec.read_to_end(&mut out)?;
            out
        } else {
            raw
        };
        let value: serde_json::Value =
            serde_json::from_slice(&json).map_err(|e| Error::Format(e.to_string()))?;
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Format("missing version field".into()))?;
        if version != MODEL_FORMAT_VERSION as u64 {
            return Err(Error::FormatVersionMismatch {
                found: version as u32,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        file.into_model()
    }
}

impl LogitSource for CacheNGramModel {
    fn log_probs(&self, context: &Context) -> Result<LogitVector> {
        if context.len() > context.budget() {
            return Err(Error::ContextOverflow {
                len: context.len(),
                budget: context.budget(),
            });
        }
        let probs = self.next_token_probs(context.tokens());
        Ok(LogitVector::new(probs.into_iter().map(f64::ln).collect()))
    }

    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }
}

/// Self-describing on-disk envelope. Count tables are stored as sorted
/// arrays so that identical models serialise to identical bytes.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    mode: VocabMode,
    tokens: Vec<String>,
    order: usize,
    smoothing_alpha: f64,
    cache_weight: f64,
    cache_decay: f64,
    /// `orders[k-1]` is a list of `[context_ids, [[token, count], ...]]`.
    orders: Vec<Vec<(Vec<u32>, Vec<(u32, u64)>)>>,
}

impl ModelFile {
    fn from_model(m: &CacheNGramModel) -> ModelFile {
        let mut orders = Vec::with_capacity(m.orders.len());
        for table in &m.orders {
            let mut entries: Vec<(Vec<u32>, Vec<(u32, u64)>)> = table
                .iter()
                .map(|(ctx, t)| {
                    let mut counts: Vec<(u32, u64)> =
                        t.counts.iter().map(|(tok, c)| (tok.0, *c)).collect();
                    counts.sort_unstable();
                    (ctx.iter().map(|t| t.0).collect(), counts)
                })
                .collect();
            entries.sort_unstable();
            orders.push(entries);
        }
        ModelFile {
            version: MODEL_FORMAT_VERSION,
            mode: m.vocab.mode(),
            tokens: m.vocab.tokens().to_vec(),
            order: m.params.order,
            smoothing_alpha: m.params.smoothing_alpha,
            cache_weight: m.params.cache_weight,
            cache_decay: m.params.cache_decay,
            orders,
        }
    }

    fn into_model(self) -> Result<CacheNGramModel> {
        if self.orders.len() != self.order {
            return Err(Error::Format(format!(
                "expected {} count tables, found {}",
                self.order,
                self.orders.len()
            )));
        }
        let vocab = Vocabulary::from_tokens(self.tokens, self.mode);
        let v = vocab.len() as u32;
        let mut orders = Vec::with_capacity(self.orders.len());
        for entries in self.orders {
            let mut table: HashMap<Vec<TokenId>, CountTable> = HashMap::new();
            for (ctx, counts) in entries {
                if ctx.iter().any(|&id| id >= v) || counts.iter().any(|&(id, _)| id >= v) {
                    return Err(Error::Format("token id out of vocabulary range".into()));
                }
                let mut ct = CountTable::default();
                for (tok, c) in counts {
                    ct.counts.insert(TokenId(tok), c);
                    ct.total += c;
                }
                table.insert(ctx.into_iter().map(TokenId).collect(), ct);
            }
            orders.push(table);
        }
        Ok(CacheNGramModel {
            vocab,
            params: TrainParams {
                order: self.order,
                smoothing_alpha: self.smoothing_alpha,
                cache_weight: self.cache_weight,
                cache_decay: self.cache_decay,
            },
            orders,
        })
    }
}
