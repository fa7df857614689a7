//! Text-to-vector embedding: the built-in hashing embedder, an external
//! HTTP client, a disk cache, and the static token table used by
//! contrastive search.

pub mod builtin;
pub mod cache;
pub mod external;
pub mod token_table;

pub use builtin::{embed_builtin, fit_idf, mean_embedding, EmbedderConfig};
pub use cache::EmbeddingCache;
pub use external::ExternalEmbedder;
pub use token_table::{ppmi_matrix, token_embedding_table};
