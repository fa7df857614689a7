//! TOML config file plus flag overrides. Precedence is always
//! flag > config file > built-in default, and unknown keys are a hard
//! error so typos cannot silently fall back to defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub models: ModelsSection,
    #[serde(default)]
    pub generate: GenerateSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub corpus: Option<PathBuf>,
    /// Optional separate corpus for vocabulary construction, so a model
    /// pair trained on different corpora still shares one vocabulary.
    pub vocab_corpus: Option<PathBuf>,
    pub role: Option<String>,
    pub vocab_mode: Option<String>,
    pub order: Option<usize>,
    pub smoothing_alpha: Option<f64>,
    pub cache_weight: Option<f64>,
    pub cache_decay: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsSection {
    pub domain: Option<PathBuf>,
    pub base: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct QuotaEntry {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub instruction: Option<String>,
    pub count: Option<usize>,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub allow_extrapolation: Option<bool>,
    pub negative_count: Option<usize>,
    pub max_new_tokens: Option<usize>,
    pub context_budget: Option<usize>,
    pub method: Option<String>,
    pub p: Option<f64>,
    pub k: Option<usize>,
    pub temperature: Option<f64>,
    /// Real dataset file used as the negative-prompt pool.
    pub real: Option<PathBuf>,
    pub format: Option<String>,
    pub quotas: Option<Vec<QuotaEntry>>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub real: Option<PathBuf>,
    pub synth: Option<PathBuf>,
    pub format: Option<String>,
    pub quantize_k: Option<usize>,
    pub hull_dim: Option<usize>,
    pub hull_tau: Option<f64>,
    pub auroc_folds: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub gammas: Option<Vec<f64>>,
    pub etas: Option<Vec<f64>>,
    pub samples_per_cell: Option<usize>,
    pub generation_budget: Option<usize>,
    pub keep_datasets: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&raw).map_err(|e| CliError::config(format!("config error: {e}")))
    }
}

/// Pick the first present value: flag, then config, then default.
pub fn layer<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Like `layer` but with no default: absence is a configuration error
/// naming the field.
pub fn required<T>(flag: Option<T>, file: Option<T>, field: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::config(format!("missing required field `{field}` (set it via flag or config file)")))
}

/// SHA-256 over the canonical JSON form of a resolved configuration.
pub fn fingerprint<T: Serialize>(resolved: &T) -> String {
    let json = serde_json::to_string(resolved).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    format!("{:x}", hasher.finalize())
}
