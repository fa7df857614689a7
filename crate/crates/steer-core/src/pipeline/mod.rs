//! End-to-end dataset pipeline: ingestion, guided generation with
//! provenance, and hyperparameter sweeps.

pub mod dataset;
pub mod generate;
pub mod sweep;

pub use dataset::{
    escape_separator, ingest_dataset, read_synthetic_jsonl, write_jsonl, Dataset, DatasetFormat,
    DatasetKind, DatasetRecord, GenMeta, RECORD_SEPARATOR,
};
pub use generate::{
    build_negative_prompt, conditioned_instruction, generate_dataset, replay_record,
    GenerationJob,
};
pub use sweep::{run_sweep, SweepGrid, SweepOutcome};
