//! Synthetic dataset generation: negative prompt assembly plus the guided
//! autoregressive loop, with full per-record provenance.

use crate::decoding::{generate_sequence, mix_seed, Rng, SamplerConfig, StopCriteria};
use crate::error::{Error, Result};
use crate::guidance::{steer_step, ConditioningPrompt, GuidanceParams, ModelPair};
use crate::lm::{Context, TokenId, Vocabulary, DEFAULT_CONTEXT_BUDGET};
use crate::pipeline::dataset::{
    Dataset, DatasetKind, DatasetRecord, GenMeta, RECORD_SEPARATOR,
};

#[derive(Debug, Clone)]
pub struct GenerationJob {
    /// Instruction prompt `c`.
    pub instruction: String,
    /// Number of examples to generate.
    pub count: usize,
    /// Per-label target counts; must sum to `count` when present.
    pub quotas: Option<Vec<(String, usize)>>,
    pub guidance: GuidanceParams,
    pub sampler: SamplerConfig,
    /// Number of records sampled into the negative prompt.
    pub negative_count: usize,
    pub max_new_tokens: usize,
    pub context_budget: usize,
    pub master_seed: u64,
}

impl GenerationJob {
    pub fn new(instruction: &str, count: usize, guidance: GuidanceParams) -> GenerationJob {
        GenerationJob {
            instruction: instruction.to_string(),
            count,
            quotas: None,
            guidance,
            sampler: SamplerConfig::default(),
            negative_count: 4,
            max_new_tokens: 64,
            context_budget: DEFAULT_CONTEXT_BUDGET,
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.guidance.validate()?;
        if let Some(quotas) = &self.quotas {
            let total: usize = quotas.iter().map(|(_, c)| c).sum();
            if total != self.count {
                return Err(Error::Config(format!(
                    "label quotas sum to {total}, job count is {}",
                    self.count
                )));
            }
        }
        if self.max_new_tokens == 0 {
            return Err(Error::Config("max_new_tokens must be > 0".into()));
        }
        Ok(())
    }

    /// Label of the i-th example under the quota plan: quota blocks in the
    /// order given.
    fn label_for(&self, index: usize) -> Option<&str> {
        let quotas = self.quotas.as_ref()?;
        let mut cursor = 0;
        for (label, count) in quotas {
            cursor += count;
            if index < cursor {
                return Some(label);
            }
        }
        None
    }
}

/// Instruction text with the label-conditioning suffix applied.
pub fn conditioned_instruction(instruction: &str, label: Option<&str>) -> String {
    match label {
        Some(l) => format!("{instruction}Label: {l}\n"),
        None => instruction.to_string(),
    }
}

/// Sample up to `k` records without replacement from the pooled real and
/// synthetic records, join their texts with the separator, and trim whole
/// records from the end until the tokenised prompt fits `token_budget`.
/// Returns the token sequence and the ids actually used.
pub fn build_negative_prompt(
    real: &Dataset,
    synth: &Dataset,
    k: usize,
    rng: &mut Rng,
    vocab: &Vocabulary,
    token_budget: usize,
) -> (Vec<TokenId>, Vec<String>) {
    let pool: Vec<&DatasetRecord> = real.records.iter().chain(&synth.records).collect();
    if k == 0 || pool.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let take = k.min(pool.len());
    let picked = rng.sample_without_replacement(pool.len(), take);
    let mut chosen: Vec<&DatasetRecord> = picked.into_iter().map(|i| pool[i]).collect();
    loop {
        if chosen.is_empty() {
            return (Vec::new(), Vec::new());
        }
        let joined = chosen
            .iter()
            .map(|r| r.text.as_str())
            .collect::<Vec<_>>()
            .join(RECORD_SEPARATOR);
        let tokens = vocab.tokenize(&joined);
        if tokens.len() <= token_budget {
            let ids = chosen.iter().map(|r| r.id.clone()).collect();
            return (tokens, ids);
        }
        chosen.pop();
    }
}

fn synth_id(index: usize) -> String {
    format!("s{index:06}")
}

/// One guided generation with a fixed seed and negative prompt. Returns
/// the detokenised text.
fn generate_one(
    models: &ModelPair,
    vocab: &Vocabulary,
    positive: &[TokenId],
    negative: Vec<TokenId>,
    guidance: &GuidanceParams,
    sampler: &SamplerConfig,
    seed: u64,
    max_new_tokens: usize,
    budget: usize,
    token_embeddings: Option<&[Vec<f64>]>,
) -> Result<String> {
    let prompt = ConditioningPrompt {
        positive: positive.to_vec(),
        negative,
    };
    let fixed_len = prompt.positive.len() + prompt.negative.len();
    if fixed_len + max_new_tokens > budget {
        return Err(Error::ContextOverflow {
            len: fixed_len + max_new_tokens,
            budget,
        });
    }
    let sampler = SamplerConfig {
        seed,
        ..sampler.clone()
    };
    // The running context holds only generated tokens; steer_step prepends
    // the conditioning prompts itself.
    let start = Context::new(Vec::new(), budget - fixed_len)?;
    let stop = StopCriteria {
        eos: TokenId::EOS,
        max_new_tokens,
    };
    let tokens = generate_sequence(
        &mut |ctx| steer_step(models, &prompt, ctx, guidance),
        &start,
        &sampler,
        &stop,
        token_embeddings,
    )?;
    vocab.detokenize(&tokens)
}

/// Generate `job.count` records. The negative prompt is rebuilt for every
/// example from the real records plus everything generated so far, so the
/// repulsion target grows with the dataset.
pub fn generate_dataset(
    job: &GenerationJob,
    models: &ModelPair,
    vocab: &Vocabulary,
    real: &Dataset,
    token_embeddings: Option<&[Vec<f64>]>,
) -> Result<Dataset> {
    job.validate()?;
    let mut synth = Dataset {
        kind: DatasetKind::Synthetic,
        records: Vec::with_capacity(job.count),
    };
    for i in 0..job.count {
        let label = job.label_for(i);
        let instruction = conditioned_instruction(&job.instruction, label);
        let positive = vocab.tokenize(&instruction);
        let seed = mix_seed(job.master_seed, i as u64);
        let headroom = positive.len() + job.max_new_tokens;
        let neg_budget = job.context_budget.saturating_sub(headroom);
        let mut neg_rng = Rng::new(mix_seed(seed, u64::MAX));
        let (negative, negative_ids) = build_negative_prompt(
            real,
            &synth,
            job.negative_count,
            &mut neg_rng,
            vocab,
            neg_budget,
        );

        let mut quality_flag = None;
        let mut used_seed = seed;
        let mut text = generate_one(
            models,
            vocab,
            &positive,
            negative.clone(),
            &job.guidance,
            &job.sampler,
            seed,
            job.max_new_tokens,
            job.context_budget,
            token_embeddings,
        )?;
        if text.trim().is_empty() {
            used_seed = mix_seed(seed, 1);
            text = generate_one(
                models,
                vocab,
                &positive,
                negative,
                &job.guidance,
                &job.sampler,
                used_seed,
                job.max_new_tokens,
                job.context_budget,
                token_embeddings,
            )?;
            if text.trim().is_empty() {
                quality_flag = Some("empty_after_retry".to_string());
            }
        }

        synth.records.push(DatasetRecord {
            id: synth_id(i),
            text,
            label: label.map(str::to_string),
            meta: Some(GenMeta {
                gamma: job.guidance.gamma,
                eta: job.guidance.eta,
                sampler: job.sampler.fingerprint(),
                seed: used_seed,
                negative_prompt_ids: negative_ids,
                quality_flag,
            }),
        });
    }
    synth.validate()?;
    Ok(synth)
}

/// Reproduce one record's text from its stored provenance: the negative
/// prompt is rebuilt from the recorded ids (resolved against the real set
/// and the earlier synthetic records) and generation reruns with the
/// recorded seed.
pub fn replay_record(
    job: &GenerationJob,
    models: &ModelPair,
    vocab: &Vocabulary,
    real: &Dataset,
    synth: &Dataset,
    record: &DatasetRecord,
) -> Result<String> {
    let meta = record
        .meta
        .as_ref()
        .ok_or_else(|| Error::Config(format!("record {} has no metadata", record.id)))?;
    let lookup = |id: &str| -> Result<&str> {
        real.records
            .iter()
            .chain(&synth.records)
            .find(|r| r.id == id)
            .map(|r| r.text.as_str())
            .ok_or_else(|| Error::Config(format!("negative prompt id {id} not found")))
    };
    let joined = meta
        .negative_prompt_ids
        .iter()
        .map(|id| lookup(id))
        .collect::<Result<Vec<_>>>()?
        .join(RECORD_SEPARATOR);
    let negative = vocab.tokenize(&joined);
    let instruction = conditioned_instruction(&job.instruction, record.label.as_deref());
    let positive = vocab.tokenize(&instruction);
    let guidance = GuidanceParams {
        gamma: meta.gamma,
        eta: meta.eta,
        allow_extrapolation: job.guidance.allow_extrapolation,
    };
    generate_one(
        models,
        vocab,
        &positive,
        negative,
        &guidance,
        &job.sampler,
        meta.seed,
        job.max_new_tokens,
        job.context_budget,
        None,
    )
}
