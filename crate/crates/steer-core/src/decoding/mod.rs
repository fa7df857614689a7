//! Token-level sampling strategies and the autoregressive generation loop.
//!
//! Determinism contract: every operation here is a pure function of its
//! inputs plus the seeded PRNG, and ties are always broken toward the lower
//! token id, so a fixed (seed, config, model) triple is bit-reproducible.

mod rng;

pub use rng::{mix_seed, Rng};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{Context, LogitVector, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMethod {
    Greedy,
    TopK,
    Nucleus,
    ContrastiveSearch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: SampleMethod,
    /// Nucleus mass in (0, 1].
    pub p: f64,
    /// Top-k cutoff; also the candidate-set size for contrastive search.
    pub k: usize,
    pub temperature: f64,
    /// Degeneration-penalty weight for contrastive search, in [0, 1].
    pub degeneration_alpha: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> SamplerConfig {
        SamplerConfig {
            method: SampleMethod::Nucleus,
            p: 0.95,
            k: 50,
            temperature: 1.0,
            degeneration_alpha: 0.6,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if self.temperature <= 0.0 {
            return Err(Error::NonPositiveTemperature(self.temperature));
        }
        match self.method {
            SampleMethod::Nucleus => {
                if !(self.p > 0.0 && self.p <= 1.0) {
                    return Err(Error::InvalidP(self.p));
                }
            }
            SampleMethod::TopK | SampleMethod::ContrastiveSearch => {
                if self.k < 1 || self.k > vocab_size {
                    return Err(Error::InvalidK(self.k));
                }
            }
            SampleMethod::Greedy => {}
        }
        Ok(())
    }

    /// Stable description used in generation metadata.
    pub fn fingerprint(&self) -> String {
        match self.method {
            SampleMethod::Greedy => format!("greedy(T={})", self.temperature),
            SampleMethod::TopK => format!("top_k(k={},T={})", self.k, self.temperature),
            SampleMethod::Nucleus => format!("nucleus(p={},T={})", self.p, self.temperature),
            SampleMethod::ContrastiveSearch => format!(
                "contrastive_search(k={},alpha={},T={})",
                self.k, self.degeneration_alpha, self.temperature
            ),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StopCriteria {
    pub eos: TokenId,
    pub max_new_tokens: usize,
}

/// Element-wise `logp / T`.
pub fn apply_temperature(logp: &LogitVector, temperature: f64) -> Result<LogitVector> {
    if temperature <= 0.0 || temperature.is_nan() {
        return Err(Error::NonPositiveTemperature(temperature));
    }
    Ok(LogitVector::new(
        logp.scores.iter().map(|&s| s / temperature).collect(),
    ))
}

/// Keep the k highest-scoring entries, mask the rest with `-inf`. Ties at
/// the cutoff are resolved toward the lower token id.
pub fn top_k_filter(logp: &LogitVector, k: usize) -> Result<LogitVector> {
    let v = logp.len();
    if k < 1 || k > v {
        return Err(Error::InvalidK(k));
    }
    let mut order: Vec<usize> = (0..v).collect();
    order.sort_by(|&a, &b| {
        logp.scores[b]
            .partial_cmp(&logp.scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut out = vec![f64::NEG_INFINITY; v];
    for &i in order.iter().take(k) {
        out[i] = logp.scores[i];
    }
    Ok(LogitVector::new(out))
}

/// Keep the smallest descending-probability prefix with cumulative mass
/// >= p; mask everything else. Renormalisation is deferred to softmax.
pub fn nucleus_filter(logp: &LogitVector, p: f64) -> Result<LogitVector> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidP(p));
    }
    let probs = logp.softmax()?;
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut out = vec![f64::NEG_INFINITY; probs.len()];
    let mut cum = 0.0;
    for &i in &order {
        out[i] = logp.scores[i];
        cum += probs[i];
        if cum >= p {
            break;
        }
    }
    Ok(LogitVector::new(out))
}

/// Draw one token from the softmax over the unmasked entries.
pub fn sample_token(logp: &LogitVector, rng: &mut Rng) -> Result<TokenId> {
    let probs = logp.softmax()?;
    let u = rng.next_f64();
    let mut cum = 0.0;
    let mut last_finite = None;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last_finite = Some(i);
        cum += p;
        if u < cum {
            return Ok(TokenId(i as u32));
        }
    }
    // Rounding left u just past the accumulated mass.
    last_finite
        .map(|i| TokenId(i as u32))
        .ok_or(Error::AllMasked)
}

/// Argmax decoding; ties go to the lower token id.
pub fn greedy(logp: &LogitVector) -> Result<TokenId> {
    logp.argmax()
}

/// One contrastive-search step: among the top-k candidates by model
/// probability, pick the one maximising
/// `(1 - alpha) * P(v|ctx) - alpha * max_j cos(emb(v), emb(ctx_j))`.
pub fn contrastive_search_step(
    logp: &LogitVector,
    context: &[TokenId],
    k: usize,
    degeneration_alpha: f64,
    token_embeddings: &[Vec<f64>],
) -> Result<TokenId> {
    let filtered = top_k_filter(logp, k)?;
    let probs = logp.softmax()?;
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in filtered.scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        let emb = token_embeddings
            .get(i)
            .ok_or(Error::MissingEmbeddings(i as u32))?;
        let mut max_sim: f64 = 0.0; // empty context -> zero penalty
        for &t in context {
            let other = token_embeddings
                .get(t.index())
                .ok_or(Error::MissingEmbeddings(t.0))?;
            max_sim = max_sim.max(cosine(emb, other));
        }
        let score = (1.0 - degeneration_alpha) * probs[i] - degeneration_alpha * max_sim;
        match best {
            Some((_, b)) if score <= b => {}
            _ => best = Some((i, score)),
        }
    }
    best.map(|(i, _)| TokenId(i as u32)).ok_or(Error::AllMasked)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Autoregressive loop: logits -> temperature -> method filter -> sample ->
/// append, halting on EOS (excluded from the output) or `max_new_tokens`.
/// `logit_source` sees the full running context, so it can be a bare model
/// or an assembled guidance step.
pub fn generate_sequence(
    logit_source: &mut dyn FnMut(&Context) -> Result<LogitVector>,
    prompt_context: &Context,
    sampler: &SamplerConfig,
    stop: &StopCriteria,
    token_embeddings: Option<&[Vec<f64>]>,
) -> Result<Vec<TokenId>> {
    if prompt_context.len() + stop.max_new_tokens > prompt_context.budget() {
        return Err(Error::ContextOverflow {
            len: prompt_context.len() + stop.max_new_tokens,
            budget: prompt_context.budget(),
        });
    }
    let mut rng = Rng::new(sampler.seed);
    let mut ctx = prompt_context.clone();
    let mut out = Vec::new();
    for _ in 0..stop.max_new_tokens {
        let logits = logit_source(&ctx)?;
        let scaled = apply_temperature(&logits, sampler.temperature)?;
        let next = match sampler.method {
            SampleMethod::Greedy => greedy(&scaled)?,
            SampleMethod::TopK => sample_token(&top_k_filter(&scaled, sampler.k)?, &mut rng)?,
            SampleMethod::Nucleus => sample_token(&nucleus_filter(&scaled, sampler.p)?, &mut rng)?,
            SampleMethod::ContrastiveSearch => {
                let table = token_embeddings.ok_or(Error::MissingEmbeddings(0))?;
                contrastive_search_step(
                    &scaled,
                    ctx.tokens(),
                    sampler.k,
                    sampler.degeneration_alpha,
                    table,
                )?
            }
        };
        if next == stop.eos {
            break;
        }
        ctx.push(next)?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{CacheNGramModel, LogitSource, TrainParams, VocabMode, Vocabulary};

    fn lv(scores: &[f64]) -> LogitVector {
        LogitVector::new(scores.to_vec())
    }

    fn logp(probs: &[f64]) -> LogitVector {
        lv(&probs.iter().map(|p| p.ln()).collect::<Vec<_>>())
    }

    #[test]
    fn temperature_identity_and_scaling() {
        let x = lv(&[0.0, -1.0]);
        assert_eq!(apply_temperature(&x, 1.0).unwrap(), x);
        let half = apply_temperature(&x, 0.5).unwrap();
        assert_eq!(half.scores, vec![0.0, -2.0]);
        // Sharper than the input.
        assert!(half.softmax().unwrap()[0] > x.softmax().unwrap()[0]);
        assert!(apply_temperature(&x, 0.0).is_err());
    }

    #[test]
    fn huge_temperature_approaches_uniform() {
        let x = lv(&[3.0, -2.0, 0.5, 1.0]);
        let p = apply_temperature(&x, 1e6).unwrap().softmax().unwrap();
        let max = p.iter().cloned().fold(f64::MIN, f64::max);
        let min = p.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max - min < 1e-5);
    }

    #[test]
    fn top_k_identity_and_tie_break() {
        let x = logp(&[0.4, 0.4, 0.2]);
        assert_eq!(top_k_filter(&x, 3).unwrap(), x);
        let k1 = top_k_filter(&x, 1).unwrap();
        assert!(k1.scores[0].is_finite());
        assert!(!k1.scores[1].is_finite());
        assert!(matches!(top_k_filter(&x, 0), Err(Error::InvalidK(0))));
        assert!(matches!(top_k_filter(&x, 4), Err(Error::InvalidK(4))));
    }

    #[test]
    fn nucleus_keeps_minimal_prefix() {
        let x = logp(&[0.5, 0.3, 0.2]);
        let f = nucleus_filter(&x, 0.7).unwrap();
        assert!(f.scores[0].is_finite());
        assert!(f.scores[1].is_finite());
        assert!(!f.scores[2].is_finite());
        // p = 1 keeps everything.
        let all = nucleus_filter(&x, 1.0).unwrap();
        assert!(all.scores.iter().all(|s| s.is_finite()));
        // One-hot keeps exactly the hot token.
        let hot = LogitVector::new(vec![0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]);
        let f = nucleus_filter(&hot, 0.5).unwrap();
        assert_eq!(f.scores.iter().filter(|s| s.is_finite()).count(), 1);
    }

    #[test]
    fn sample_token_deterministic_and_unbiased() {
        let one = LogitVector::new(vec![f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY]);
        let mut r = Rng::new(1);
        assert_eq!(sample_token(&one, &mut r).unwrap(), TokenId(1));

        let mut a = Rng::new(5);
        let mut b = Rng::new(5);
        let x = logp(&[0.2, 0.3, 0.5]);
        for _ in 0..20 {
            assert_eq!(
                sample_token(&x, &mut a).unwrap(),
                sample_token(&x, &mut b).unwrap()
            );
        }

        // Uniform over 4 tokens: each frequency 0.25 +/- 0.01 over 100k draws.
        let uniform = lv(&[0.0; 4]);
        let mut r = Rng::new(7);
        let mut counts = [0u32; 4];
        for _ in 0..100_000 {
            counts[sample_token(&uniform, &mut r).unwrap().index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 100_000.0 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn greedy_matches_top1_sampling() {
        let x = logp(&[0.1, 0.9]);
        assert_eq!(greedy(&x).unwrap(), TokenId(1));
        let tie = lv(&[0.0; 3]);
        assert_eq!(greedy(&tie).unwrap(), TokenId(0));
        let mut r = Rng::new(11);
        for probs in [[0.2, 0.5, 0.3], [0.7, 0.1, 0.2]] {
            let x = logp(&probs);
            let via_k1 = sample_token(&top_k_filter(&x, 1).unwrap(), &mut r).unwrap();
            assert_eq!(greedy(&x).unwrap(), via_k1);
        }
    }

    #[test]
    fn contrastive_search_penalises_self_similarity() {
        // Two equally probable candidates; the one already in context has
        // cosine 1 with itself and must lose at alpha = 1.
        let x = logp(&[0.5, 0.5]);
        let table = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let pick = contrastive_search_step(&x, &[TokenId(0)], 2, 1.0, &table).unwrap();
        assert_eq!(pick, TokenId(1));
        // alpha = 0 reduces to greedy over the top-k set.
        let x2 = logp(&[0.3, 0.7]);
        assert_eq!(
            contrastive_search_step(&x2, &[TokenId(1)], 2, 0.0, &table).unwrap(),
            TokenId(1)
        );
        // k = 1 returns the single candidate regardless of alpha.
        assert_eq!(
            contrastive_search_step(&x2, &[TokenId(1)], 1, 1.0, &table).unwrap(),
            TokenId(1)
        );
    }

    #[test]
    fn generation_zero_budget_is_empty() {
        let lines = vec!["abab".to_string()];
        let vocab = Vocabulary::build(&lines, VocabMode::Character);
        let m = CacheNGramModel::train(&lines, vocab, TrainParams::default()).unwrap();
        let prompt = Context::with_default_budget(m.vocab().tokenize("a")).unwrap();
        let out = generate_sequence(
            &mut |c| m.log_probs(c),
            &prompt,
            &SamplerConfig::default(),
            &StopCriteria {
                eos: TokenId::EOS,
                max_new_tokens: 0,
            },
            None,
        )
        .unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn greedy_follows_bigram_argmax_chain() {
        let lines = vec!["ababababab".to_string()];
        let vocab = Vocabulary::build(&lines, VocabMode::Character);
        let m = CacheNGramModel::train(
            &lines,
            vocab,
            TrainParams {
                order: 2,
                smoothing_alpha: 1e-9,
                cache_weight: 0.0,
                cache_decay: 0.99,
            },
        )
        .unwrap();
        let prompt = Context::with_default_budget(m.vocab().tokenize("a")).unwrap();
        let out = generate_sequence(
            &mut |c| m.log_probs(c),
            &prompt,
            &SamplerConfig {
                method: SampleMethod::Greedy,
                ..SamplerConfig::default()
            },
            &StopCriteria {
                eos: TokenId::EOS,
                max_new_tokens: 6,
            },
            None,
        )
        .unwrap();
        assert_eq!(m.vocab().detokenize(&out).unwrap(), "bababa");
    }

    #[test]
    fn fixed_seed_generation_is_reproducible() {
        let lines = vec!["the cat sat on the mat".to_string(), "a cat ran".to_string()];
        let vocab = Vocabulary::build(&lines, VocabMode::Character);
        let m = CacheNGramModel::train(&lines, vocab, TrainParams::default()).unwrap();
        let prompt = Context::with_default_budget(m.vocab().tokenize("the ")).unwrap();
        let cfg = SamplerConfig {
            seed: 99,
            ..SamplerConfig::default()
        };
        let stop = StopCriteria {
            eos: TokenId::EOS,
            max_new_tokens: 40,
        };
        let a = generate_sequence(&mut |c| m.log_probs(c), &prompt, &cfg, &stop, None).unwrap();
        let b = generate_sequence(&mut |c| m.log_probs(c), &prompt, &cfg, &stop, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn headroom_violation_is_an_error() {
        let lines = vec!["ab".to_string()];
        let vocab = Vocabulary::build(&lines, VocabMode::Character);
        let m = CacheNGramModel::train(&lines, vocab, TrainParams::default()).unwrap();
        let prompt = Context::new(m.vocab().tokenize("ab"), 4).unwrap();
        let err = generate_sequence(
            &mut |c| m.log_probs(c),
            &prompt,
            &SamplerConfig::default(),
            &StopCriteria {
                eos: TokenId::EOS,
                max_new_tokens: 10,
            },
            None,
        );
        assert!(matches!(err, Err(Error::ContextOverflow { .. })));
    }
}
