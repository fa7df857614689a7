//! Dataset quality metrics: diversity, distributional similarity,
//! adversarial discriminability, and convex-hull coverage.

pub mod hull;
pub mod logreg;
pub mod ngrams;
pub mod quantize;
pub mod report;
pub mod similarity;

pub use hull::{f_score, hull_precision_recall, hull_residual, HullScores, PcaProjection};
pub use logreg::{adversarial_auroc, downstream_eval, rank_auroc, Logistic, Multinomial};
pub use ngrams::{char_tokens, diversity_score, normalized_ngrams, NgramScore};
pub use quantize::{default_k, js_divergence_base2, kmeans, quantized_divergence};
pub use report::{csv_row, evaluate_pair, EvalConfig, MetricReport, CSV_HEADER};
pub use similarity::{cosine, dataset_cosine_similarity};
