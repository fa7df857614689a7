//! Shared fixtures for the benchmark targets.

use steer_core::decoding::Rng;
use steer_core::lm::LogitVector;

/// Log-probability vector of `dim` entries drawn from a fixed stream.
pub fn random_log_probs(dim: usize, seed: u64) -> LogitVector {
    let mut rng = Rng::new(seed);
    let raw: Vec<f64> = (0..dim).map(|_| rng.next_f64().max(1e-12)).collect();
    let total: f64 = raw.iter().sum();
    LogitVector::new(raw.into_iter().map(|x| (x / total).ln()).collect())
}

/// Word-salad corpus for model and embedder benchmarks.
pub fn sample_corpus(lines: usize, seed: u64) -> Vec<String> {
    const WORDS: &[&str] = &[
        "orbit", "nebula", "quasar", "pulsar", "galaxy", "comet", "eclipse", "zenith",
        "corona", "plasma", "photon", "gravity", "stellar", "lunar", "solar", "radiant",
    ];
    let mut rng = Rng::new(seed);
    (0..lines)
        .map(|_| {
            let n = 8 + rng.next_bounded(6) as usize;
            (0..n)
                .map(|_| WORDS[rng.next_bounded(WORDS.len() as u64) as usize])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Random point cloud in `dim` dimensions.
pub fn point_cloud(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.next_f64()).collect())
        .collect()
}
