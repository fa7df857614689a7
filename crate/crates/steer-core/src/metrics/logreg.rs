//! Adversarial AUROC and the downstream classifier, both built on plain
//! gradient-descent logistic regression (learning rate 0.1, 500 epochs,
//! L2 regularisation 1e-3) so every number is reproducible in closed form.

use crate::decoding::Rng;
use crate::error::{Error, Result};

pub const LEARNING_RATE: f64 = 0.1;
pub const EPOCHS: usize = 500;
pub const L2: f64 = 1e-3;

/// Rank-statistic AUROC with ties counted 0.5. `labels[i]` true marks the
/// positive class.
pub fn rank_auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    // Average ranks over ties.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0f64; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    let rank_sum: f64 = labels
        .iter()
        .zip(&ranks)
        .filter(|(&l, _)| l)
        .map(|(_, &r)| r)
        .sum();
    Ok((rank_sum - pos as f64 * (pos as f64 + 1.0) / 2.0) / (pos as f64 * neg as f64))
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Binary logistic regression trained by full-batch gradient descent.
pub struct Logistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Logistic {
    pub fn fit(x: &[Vec<f64>], y: &[bool]) -> Logistic {
        let n = x.len();
        let dim = x.first().map(|v| v.len()).unwrap_or(0);
        let mut w = vec![0.0f64; dim];
        let mut b = 0.0f64;
        for _ in 0..EPOCHS {
            let mut gw = vec![0.0f64; dim];
            let mut gb = 0.0f64;
            for (xi, &yi) in x.iter().zip(y) {
                let z = xi.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b;
                let err = sigmoid(z) - if yi { 1.0 } else { 0.0 };
                for (g, a) in gw.iter_mut().zip(xi) {
                    *g += err * a;
                }
                gb += err;
            }
            for (wi, g) in w.iter_mut().zip(&gw) {
                *wi -= LEARNING_RATE * (g / n as f64 + L2 * *wi);
            }
            b -= LEARNING_RATE * gb / n as f64;
        }
        Logistic { weights: w, bias: b }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(x.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>() + self.bias)
    }
}

/// Stratified cross-validated AUROC of a real-vs-synthetic classifier.
/// Synthetic is the positive class. Folds are derived from a canonical
/// order (each class sorted by its vectors' bit patterns, then shuffled
/// with the fixed seed), so the result is invariant to input permutation.
pub fn adversarial_auroc(
    real: &[Vec<f64>],
    synth: &[Vec<f64>],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    if real.len() < folds || synth.len() < folds {
        return Err(Error::TooFewSamples {
            need: folds,
            got: real.len().min(synth.len()),
        });
    }
    let canonical = |set: &[Vec<f64>]| -> Vec<Vec<f64>> {
        let mut v: Vec<Vec<f64>> = set.to_vec();
        v.sort_by(|a, b| {
            let ka: Vec<u64> = a.iter().map(|x| x.to_bits()).collect();
            let kb: Vec<u64> = b.iter().map(|x| x.to_bits()).collect();
            ka.cmp(&kb)
        });
        let mut rng = Rng::new(seed);
        rng.shuffle(&mut v);
        v
    };
    let real_c = canonical(real);
    let synth_c = canonical(synth);

    let mut aucs = Vec::with_capacity(folds);
    for fold in 0..folds {
        let mut train_x: Vec<Vec<f64>> = Vec::new();
        let mut train_y: Vec<bool> = Vec::new();
        let mut test_scores: Vec<f64> = Vec::new();
        let mut test_labels: Vec<bool> = Vec::new();
        let split = |set: &[Vec<f64>], label: bool,
                         train_x: &mut Vec<Vec<f64>>,
                         train_y: &mut Vec<bool>,
                         test: &mut Vec<Vec<f64>>| {
            for (i, v) in set.iter().enumerate() {
                if i % folds == fold {
                    test.push(v.clone());
                } else {
                    train_x.push(v.clone());
                    train_y.push(label);
                }
            }
        };
        let mut test_real = Vec::new();
        let mut test_synth = Vec::new();
        split(&real_c, false, &mut train_x, &mut train_y, &mut test_real);
        split(&synth_c, true, &mut train_x, &mut train_y, &mut test_synth);
        let model = Logistic::fit(&train_x, &train_y);
        for v in &test_real {
            test_scores.push(model.score(v));
            test_labels.push(false);
        }
        for v in &test_synth {
            test_scores.push(model.score(v));
            test_labels.push(true);
        }
        aucs.push(rank_auroc(&test_scores, &test_labels)?);
    }
    Ok(aucs.iter().sum::<f64>() / folds as f64)
}

/// Multinomial (softmax) regression with the same optimiser settings.
pub struct Multinomial {
    pub classes: Vec<String>,
    weights: Vec<Vec<f64>>, // class x dim
    biases: Vec<f64>,
}

impl Multinomial {
    pub fn fit(x: &[Vec<f64>], labels: &[String]) -> Result<Multinomial> {
        let mut classes: Vec<String> = labels.to_vec();
        classes.sort();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::SingleClassTraining);
        }
        let dim = x.first().map(|v| v.len()).unwrap_or(0);
        let n = x.len() as f64;
        let idx_of = |l: &String| classes.iter().position(|c| c == l).unwrap();
        let y: Vec<usize> = labels.iter().map(idx_of).collect();
        let k = classes.len();
        let mut w = vec![vec![0.0f64; dim]; k];
        let mut b = vec![0.0f64; k];
        for _ in 0..EPOCHS {
            let mut gw = vec![vec![0.0f64; dim]; k];
            let mut gb = vec![0.0f64; k];
            for (xi, &yi) in x.iter().zip(&y) {
                let probs = softmax_scores(&w, &b, xi);
                for c in 0..k {
                    let err = probs[c] - if c == yi { 1.0 } else { 0.0 };
                    for (g, a) in gw[c].iter_mut().zip(xi) {
                        *g += err * a;
                    }
                    gb[c] += err;
                }
            }
            for c in 0..k {
                for (wi, g) in w[c].iter_mut().zip(&gw[c]) {
                    *wi -= LEARNING_RATE * (g / n + L2 * *wi);
                }
                b[c] -= LEARNING_RATE * gb[c] / n;
            }
        }
        Ok(Multinomial {
            classes,
            weights: w,
            biases: b,
        })
    }

    pub fn predict(&self, x: &[f64]) -> &str {
        let probs = softmax_scores(&self.weights, &self.biases, x);
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        &self.classes[best]
    }
}

fn softmax_scores(w: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut z: Vec<f64> = w
        .iter()
        .zip(b)
        .map(|(wc, &bc)| wc.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + bc)
        .collect();
    let max = z.iter().cloned().fold(f64::MIN, f64::max);
    let mut sum = 0.0;
    for v in &mut z {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in &mut z {
        *v /= sum;
    }
    z
}

/// Train a classifier on synthetic labeled embeddings and measure accuracy
/// on a real labeled holdout.
pub fn downstream_eval(
    synth_x: &[Vec<f64>],
    synth_labels: &[String],
    holdout_x: &[Vec<f64>],
    holdout_labels: &[String],
) -> Result<f64> {
    if holdout_x.is_empty() {
        return Err(Error::EmptyHoldout);
    }
    let model = Multinomial::fit(synth_x, synth_labels)?;
    let correct = holdout_x
        .iter()
        .zip(holdout_labels)
        .filter(|(x, l)| model.predict(x) == l.as_str())
        .count();
    Ok(correct as f64 / holdout_x.len() as f64)
}
