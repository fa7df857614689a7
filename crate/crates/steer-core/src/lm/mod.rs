//! Tokenisation, vocabulary, and the built-in trainable language model.

mod logits;
mod model;
mod remote;
mod vocab;

pub use logits::LogitVector;
pub use model::{
    CacheNGramModel, Context, LogitSource, TrainParams, DEFAULT_CONTEXT_BUDGET,
};
pub use remote::{RemoteBackend, RetryPolicy};
pub use vocab::{TokenId, VocabMode, Vocabulary};
