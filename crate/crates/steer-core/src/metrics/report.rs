//! Full evaluation of a real/synthetic dataset pair. All metrics share one
//! embedding pass so a report is internally consistent.

use serde::{Deserialize, Serialize};

use crate::embeddings::{embed_builtin, EmbedderConfig};
use crate::error::{Error, Result};
use crate::metrics::hull::{hull_precision_recall, DEFAULT_HULL_DIM};
use crate::metrics::logreg::adversarial_auroc;
use crate::metrics::ngrams::{char_tokens, normalized_ngrams};
use crate::metrics::quantize::{default_k, quantized_divergence, DEFAULT_EPSILON};
use crate::metrics::similarity::dataset_cosine_similarity;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub embedder: EmbedderConfig,
    /// Bin count for the quantised divergence; `None` uses the size rule.
    pub quantize_k: Option<usize>,
    pub quantize_epsilon: f64,
    pub hull_dim: usize,
    /// Hull membership tolerance; `None` scales with the data diameter.
    pub hull_tau: Option<f64>,
    pub auroc_folds: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> EvalConfig {
        EvalConfig {
            embedder: EmbedderConfig::default(),
            quantize_k: None,
            quantize_epsilon: DEFAULT_EPSILON,
            hull_dim: DEFAULT_HULL_DIM,
            hull_tau: None,
            auroc_folds: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub norm_ngrams: [f64; 3], // n = 2, 3, 4 over the synthetic set
    pub diversity: f64,
    pub cosine_similarity: f64,
    pub quantized_divergence: f64,
    pub adversarial_auroc: f64,
    pub hull_precision: f64,
    pub hull_recall: f64,
    pub hull_f_score: f64,
    pub n_real: usize,
    pub m_synth: usize,
    pub seed: u64,
    pub embedder_fingerprint: String,
    /// Human-readable caveats, e.g. degenerate n-gram denominators.
    pub warnings: Vec<String>,
}

fn embed_all(texts: &[String], config: &EmbedderConfig) -> Result<Vec<Vec<f64>>> {
    texts.iter().map(|t| embed_builtin(t, config)).collect()
}

/// Compute every metric for a real/synthetic pair of text datasets.
pub fn evaluate_pair(
    real: &[String],
    synth: &[String],
    config: &EvalConfig,
) -> Result<MetricReport> {
    if real.is_empty() || synth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut warnings = Vec::new();

    let synth_chars = char_tokens(synth);
    let mut norm_ngrams = [0.0f64; 3];
    let mut diversity = 1.0;
    for (i, n) in (2..=4).enumerate() {
        let score = normalized_ngrams(&synth_chars, n)?;
        if score.degenerate {
            warnings.push(format!("no {n}-grams in the synthetic set"));
        }
        norm_ngrams[i] = score.value;
        diversity *= 1.0 - score.value;
    }

    // Empty strings cannot be embedded; drop them from the vector metrics
    // but keep the report honest about it.
    let keep_nonempty = |set: &[String], name: &str, warnings: &mut Vec<String>| {
        let kept: Vec<String> = set
            .iter()
            .filter(|t| !t.trim().is_empty())
            .cloned()
            .collect();
        if kept.len() < set.len() {
            warnings.push(format!(
                "skipped {} empty {name} texts in embedding metrics",
                set.len() - kept.len()
            ));
        }
        kept
    };
    let real_kept = keep_nonempty(real, "real", &mut warnings);
    let synth_kept = keep_nonempty(synth, "synthetic", &mut warnings);
    if real_kept.is_empty() || synth_kept.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let real_vecs = embed_all(&real_kept, &config.embedder)?;
    let synth_vecs = embed_all(&synth_kept, &config.embedder)?;

    let cosine_similarity = dataset_cosine_similarity(&real_vecs, &synth_vecs)?;
    let k = config.quantize_k.unwrap_or_else(|| default_k(real.len(), synth.len()));
    let qdiv = quantized_divergence(
        &real_vecs,
        &synth_vecs,
        k,
        config.quantize_epsilon,
        config.seed,
    )?;
    let auroc = adversarial_auroc(&real_vecs, &synth_vecs, config.auroc_folds, config.seed)?;
    let hull = hull_precision_recall(&real_vecs, &synth_vecs, config.hull_dim, config.hull_tau)?;

    Ok(MetricReport {
        norm_ngrams,
        diversity,
        cosine_similarity,
        quantized_divergence: qdiv,
        adversarial_auroc: auroc,
        hull_precision: hull.precision,
        hull_recall: hull.recall,
        hull_f_score: hull.f_score,
        n_real: real.len(),
        m_synth: synth.len(),
        seed: config.seed,
        embedder_fingerprint: config.embedder.fingerprint(),
        warnings,
    })
}

pub const CSV_HEADER: &str =
    "gamma,eta,norm2,norm3,norm4,diversity,cosine,qdiv,auroc,hull_p,hull_r,hull_f,n,m,seed";

/// One CSV row in the fixed column order; floats printed with `{:.6}`.
pub fn csv_row(gamma: f64, eta: f64, report: &MetricReport) -> String {
    format!(
        "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{}",
        gamma,
        eta,
        report.norm_ngrams[0],
        report.norm_ngrams[1],
        report.norm_ngrams[2],
        report.diversity,
        report.cosine_similarity,
        report.quantized_divergence,
        report.adversarial_auroc,
        report.hull_precision,
        report.hull_recall,
        report.hull_f_score,
        report.n_real,
        report.m_synth,
        report.seed
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoding::Rng;

    fn words(seed: u64, count: usize, lexicon: &[&str]) -> Vec<String> {
        let mut rng = Rng::new(seed);
        (0..count)
            .map(|_| {
                let len = 4 + rng.next_bounded(8) as usize;
                (0..len)
                    .map(|_| lexicon[rng.next_bounded(lexicon.len() as u64) as usize])
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }

    #[test]
    fn identical_pair_scores_are_self_consistent() {
        let lex = ["alpha", "beta", "gamma", "delta", "omega"];
        let data = words(1, 30, &lex);
        let report = evaluate_pair(&data, &data, &EvalConfig::default()).unwrap();
        assert!((report.cosine_similarity - 1.0).abs() < 1e-9);
        assert!((report.quantized_divergence - 1.0).abs() < 1e-9);
        assert_eq!(report.hull_precision, 1.0);
        assert_eq!(report.hull_recall, 1.0);
        assert_eq!(report.n_real, 30);
        assert_eq!(report.m_synth, 30);
    }

    #[test]
    fn disjoint_vocabularies_separate_cleanly() {
        let real = words(2, 30, &["red", "rust", "ruby", "rose"]);
        let synth = words(3, 30, &["kelp", "kiwi", "knot", "kept"]);
        let report = evaluate_pair(&real, &synth, &EvalConfig::default()).unwrap();
        assert!(report.adversarial_auroc > 0.9, "{}", report.adversarial_auroc);
        assert!(report.cosine_similarity < 0.6, "{}", report.cosine_similarity);
        assert!(report.quantized_divergence < 0.5, "{}", report.quantized_divergence);
    }

    #[test]
    fn report_is_deterministic() {
        let real = words(4, 25, &["sun", "moon", "star"]);
        let synth = words(5, 25, &["sun", "moon", "sky"]);
        let cfg = EvalConfig::default();
        let a = evaluate_pair(&real, &synth, &cfg).unwrap();
        let b = evaluate_pair(&real, &synth, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn csv_row_has_fixed_column_count() {
        let real = words(6, 25, &["a1", "b2", "c3"]);
        let report = evaluate_pair(&real, &real, &EvalConfig::default()).unwrap();
        let row = csv_row(1.5, 0.9, &report);
        assert_eq!(row.split(',').count(), CSV_HEADER.split(',').count());
        assert!(row.starts_with("1.500000,0.900000,"));
    }

    #[test]
    fn degenerate_short_texts_warn() {
        let real = vec!["abcdefgh".to_string(); 20];
        let synth = vec!["ab".to_string(); 20];
        let report = evaluate_pair(&real, &synth, &EvalConfig::default()).unwrap();
        assert!(report.warnings.iter().any(|w| w.contains("3-grams")));
        assert_eq!(report.norm_ngrams[1], 0.0);
    }
}
