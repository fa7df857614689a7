//! Guided decoding toolkit: contrastive expert guidance and negative
//! prompting as inference-time logit arithmetic over a pluggable language
//! model interface, plus the sampling, embedding, metric, and dataset
//! generation machinery around it.

pub mod decoding;
pub mod embeddings;
pub mod error;
pub mod guidance;
pub mod lm;
pub mod metrics;
pub mod pipeline;

pub use decoding::{generate_sequence, Rng, SampleMethod, SamplerConfig, StopCriteria};
pub use error::{Error, Result};
pub use guidance::{
    cfg_guidance, contrastive_expert_guidance, negative_prompt_logits, steer_combine, steer_step,
    ConditioningPrompt, GuidanceParams, ModelPair,
};
pub use lm::{
    CacheNGramModel, Context, LogitSource, LogitVector, RemoteBackend, RetryPolicy, TokenId,
    TrainParams, VocabMode, Vocabulary, DEFAULT_CONTEXT_BUDGET,
};
pub use metrics::{evaluate_pair, EvalConfig, MetricReport};
pub use pipeline::{Dataset, DatasetRecord, GenerationJob, SweepGrid};
