//! Quantised-divergence score: k-means over the pooled embeddings, then
//! `1 - JS_2` between the per-dataset bin histograms. Identical datasets
//! score 1; the score is bounded in [0, 1] because the Jensen-Shannon
//! divergence in log base 2 is.

use crate::decoding::Rng;
use crate::error::{Error, Result};
use crate::metrics::similarity::sq_dist;

pub const DEFAULT_EPSILON: f64 = 1e-6;
const MAX_ITERS: usize = 300;
const CONVERGENCE_TOL: f64 = 1e-8;

/// Centroids from k-means with k-means++ initialisation.
#[derive(Debug, Clone)]
pub struct QuantizationModel {
    pub centroids: Vec<Vec<f64>>,
}

impl QuantizationModel {
    pub fn nearest(&self, point: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centroids.iter().enumerate() {
            let d = sq_dist(c, point);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// Deterministic seeded k-means. Ties in assignment go to the lower bin.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<QuantizationModel> {
    if k < 2 || points.len() < k {
        return Err(Error::TooFewPoints {
            need: k.max(2),
            got: points.len(),
        });
    }
    let mut rng = Rng::new(seed);
    // k-means++ seeding.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.next_bounded(points.len() as u64) as usize].clone());
    let mut dists: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dists.iter().sum();
        let next = if total <= 0.0 {
            // All remaining mass identical; fall back to uniform choice.
            rng.next_bounded(points.len() as u64) as usize
        } else {
            let mut u = rng.next_f64() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in dists.iter().enumerate() {
                u -= d;
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(points[next].clone());
        for (d, p) in dists.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, centroids.last().unwrap()));
        }
    }

    let model_of = |centroids: &Vec<Vec<f64>>| QuantizationModel {
        centroids: centroids.clone(),
    };
    let dim = points[0].len();
    for _ in 0..MAX_ITERS {
        let model = model_of(&centroids);
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for p in points {
            let a = model.nearest(p);
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        for i in 0..k {
            if counts[i] == 0 {
                continue; // empty bin keeps its centroid
            }
            for (j, s) in sums[i].iter().enumerate() {
                let new = s / counts[i] as f64;
                shift += (new - centroids[i][j]).powi(2);
                centroids[i][j] = new;
            }
        }
        if shift.sqrt() < CONVERGENCE_TOL {
            break;
        }
    }
    Ok(QuantizationModel { centroids })
}

/// Jensen-Shannon divergence with log base 2; inputs must be distributions.
pub fn js_divergence_base2(p: &[f64], q: &[f64]) -> f64 {
    let mut js = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            js += 0.5 * a * (a / m).log2();
        }
        if b > 0.0 {
            js += 0.5 * b * (b / m).log2();
        }
    }
    js.clamp(0.0, 1.0)
}

/// Default bin count: `max(2, min(50, (n + m) / 20))`.
pub fn default_k(n: usize, m: usize) -> usize {
    ((n + m) / 20).clamp(2, 50)
}

fn histogram(model: &QuantizationModel, points: &[Vec<f64>], epsilon: f64) -> Vec<f64> {
    let k = model.centroids.len();
    let mut h = vec![0.0f64; k];
    for p in points {
        h[model.nearest(p)] += 1.0;
    }
    let total: f64 = points.len() as f64 + epsilon * k as f64;
    for b in &mut h {
        *b = (*b + epsilon) / total;
    }
    h
}

/// `1 - JS_2(hist_real, hist_synth)` over k-means bins of the pooled set.
pub fn quantized_divergence(
    real: &[Vec<f64>],
    synth: &[Vec<f64>],
    k: usize,
    epsilon: f64,
    seed: u64,
) -> Result<f64> {
    let pooled: Vec<Vec<f64>> = real.iter().chain(synth).cloned().collect();
    if k < 2 || pooled.len() < k {
        return Err(Error::TooFewPoints {
            need: k.max(2),
            got: pooled.len(),
        });
    }
    let model = kmeans(&pooled, k, seed)?;
    let p = histogram(&model, real, epsilon);
    let q = histogram(&model, synth, epsilon);
    Ok(1.0 - js_divergence_base2(&p, &q))
}
