//! Static token-embedding table for contrastive search.
//!
//! PPMI co-occurrence matrix (symmetric window of +/-2) factorised by
//! truncated SVD; rows are L2-normalised. Deterministic given corpus and
//! dimension: singular-vector signs are fixed by making each vector's
//! largest-magnitude entry positive.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lm::{TokenId, Vocabulary};

const WINDOW: usize = 2;

/// Raw PPMI matrix over the vocabulary, exposed for oracle tests.
pub fn ppmi_matrix(corpus: &[String], vocab: &Vocabulary) -> Result<DMatrix<f64>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let v = vocab.len();
    let mut cooc = DMatrix::<f64>::zeros(v, v);
    for line in corpus {
        let toks = vocab.tokenize(line);
        for (i, &a) in toks.iter().enumerate() {
            let lo = i.saturating_sub(WINDOW);
            let hi = (i + WINDOW + 1).min(toks.len());
            for (j, &b) in toks.iter().enumerate().take(hi).skip(lo) {
                if i != j {
                    cooc[(a.index(), b.index())] += 1.0;
                }
            }
        }
    }
    let total: f64 = cooc.sum();
    if total == 0.0 {
        return Ok(cooc);
    }
    let row_sums: Vec<f64> = (0..v).map(|i| cooc.row(i).sum()).collect();
    let mut ppmi = DMatrix::<f64>::zeros(v, v);
    for i in 0..v {
        for j in 0..v {
            let c = cooc[(i, j)];
            if c > 0.0 && row_sums[i] > 0.0 && row_sums[j] > 0.0 {
                let pmi = (c * total / (row_sums[i] * row_sums[j])).ln();
                if pmi > 0.0 {
                    ppmi[(i, j)] = pmi;
                }
            }
        }
    }
    Ok(ppmi)
}

/// Build the table: one unit vector per vocabulary entry. Tokens with an
/// all-zero PPMI row (never co-occurring with anything) map to the fixed
/// unit basis vector `e_{id mod dim}`.
pub fn token_embedding_table(
    corpus: &[String],
    vocab: &Vocabulary,
    dim: usize,
) -> Result<Vec<Vec<f64>>> {
    let v = vocab.len();
    let d = dim.min(v).max(1);
    let ppmi = ppmi_matrix(corpus, vocab)?;
    let zero_rows: Vec<bool> = (0..v).map(|i| ppmi.row(i).iter().all(|&x| x == 0.0)).collect();

    let svd = ppmi.clone().svd(true, false);
    let mut u = svd.u.expect("svd with u requested");
    let sigma = svd.singular_values;

    // Sign convention: largest-|entry| of each kept singular vector positive.
    for c in 0..d.min(u.ncols()) {
        let col = u.column(c);
        let mut best = 0;
        for r in 1..col.len() {
            if col[r].abs() > col[best].abs() {
                best = r;
            }
        }
        if col[best] < 0.0 {
            for r in 0..u.nrows() {
                u[(r, c)] = -u[(r, c)];
            }
        }
    }

    let mut table = Vec::with_capacity(v);
    for i in 0..v {
        let mut row = vec![0.0f64; dim];
        if zero_rows[i] {
            row[i % dim] = 1.0;
        } else {
            for (c, val) in row.iter_mut().enumerate().take(d.min(u.ncols())) {
                *val = u[(i, c)] * sigma.get(c).copied().unwrap_or(0.0).sqrt();
            }
            let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                row = vec![0.0; dim];
                row[i % dim] = 1.0;
            } else {
                for x in &mut row {
                    *x /= norm;
                }
            }
        }
        table.push(row);
    }
    Ok(table)
}

/// Convenience: cosine between two table rows.
pub fn table_cosine(table: &[Vec<f64>], a: TokenId, b: TokenId) -> f64 {
    let (x, y) = (&table[a.index()], &table[b.index()]);
    x.iter().zip(y).map(|(p, q)| p * q).sum()
}
