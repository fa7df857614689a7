//! Convex-hull precision and recall. Points are projected to a low
//! dimension with PCA fit on the pooled sets, then hull membership is
//! decided with Frank-Wolfe projection onto the convex hull: a point is a
//! member when the distance from the hull is at most `tau`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_HULL_DIM: usize = 5;
pub const FW_MAX_ITERS: usize = 2000;
pub const FW_GAP_TOL: f64 = 1e-10;
pub const TAU_DIAMETER_FACTOR: f64 = 1e-6;

/// PCA basis fit on the pooled point set. Components carry a fixed sign
/// convention (largest-magnitude entry positive) so the projection is
/// deterministic.
pub struct PcaProjection {
    mean: DVector<f64>,
    components: DMatrix<f64>, // dim x out_dim
}

impl PcaProjection {
    pub fn fit(points: &[Vec<f64>], out_dim: usize) -> Result<PcaProjection> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                need: 2,
                got: points.len(),
            });
        }
        let dim = points[0].len();
        let n = points.len();
        let out_dim = out_dim.min(dim);
        let mut mean = DVector::zeros(dim);
        for p in points {
            mean += DVector::from_column_slice(p);
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(dim, dim);
        for p in points {
            let d = DVector::from_column_slice(p) - &mean;
            cov += &d * d.transpose();
        }
        cov /= n as f64;
        let eig = cov.symmetric_eigen();
        // Eigenpairs by descending eigenvalue.
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut components = DMatrix::zeros(dim, out_dim);
        for (j, &idx) in order.iter().take(out_dim).enumerate() {
            let mut col = eig.eigenvectors.column(idx).clone_owned();
            let mut max_i = 0;
            for i in 0..dim {
                if col[i].abs() > col[max_i].abs() {
                    max_i = i;
                }
            }
            if col[max_i] < 0.0 {
                col = -col;
            }
            components.set_column(j, &col);
        }
        Ok(PcaProjection { mean, components })
    }

    pub fn project(&self, point: &[f64]) -> Vec<f64> {
        let d = DVector::from_column_slice(point) - &self.mean;
        (self.components.transpose() * d).iter().cloned().collect()
    }
}

/// Distance from `point` to the convex hull of `set`, via pairwise
/// Frank-Wolfe minimisation of `||x - point||^2` over the simplex of
/// vertex weights. The pairwise variant moves weight from the worst
/// active vertex to the best one each step and converges linearly, so
/// the duality-gap stop is actually reached within the iteration cap.
pub fn hull_residual(set: &[Vec<f64>], point: &[f64]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::TooFewPoints { need: 1, got: 0 });
    }
    let p = DVector::from_column_slice(point);
    let vertex = |i: usize| DVector::from_column_slice(&set[i]);
    // Start from the vertex nearest to the target.
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, v) in set.iter().enumerate() {
        let d: f64 = v.iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    let mut weights = vec![0.0f64; set.len()];
    weights[best] = 1.0;
    let mut x = vertex(best);
    for iter in 0..FW_MAX_ITERS {
        if iter % 128 == 127 {
            // Rebuild the iterate from the weights to cancel drift from
            // the incremental updates.
            x = DVector::zeros(p.len());
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    x += *w * vertex(i);
                }
            }
        }
        let grad = &x - &p; // half the true gradient, sign is what matters
        // Linear minimisation oracle over the vertices, and the away
        // vertex among those currently carrying weight.
        let mut s_idx = 0;
        let mut s_val = f64::INFINITY;
        let mut a_idx = 0;
        let mut a_val = f64::NEG_INFINITY;
        for (i, v) in set.iter().enumerate() {
            let val: f64 = v.iter().zip(grad.iter()).map(|(a, g)| a * g).sum();
            if val < s_val {
                s_val = val;
                s_idx = i;
            }
            if weights[i] > 0.0 && val > a_val {
                a_val = val;
                a_idx = i;
            }
        }
        let gap = 2.0 * (grad.dot(&x) - s_val);
        if gap <= FW_GAP_TOL {
            break;
        }
        // Candidate 1: pairwise step moving weight from the away vertex to
        // the LMO vertex. Clamping to the available weight can make this a
        // tiny "drop" step, so its decrease is compared against a plain
        // Frank-Wolfe step and the better of the two is taken.
        let d_pw = vertex(a_idx) - vertex(s_idx);
        let denom_pw = d_pw.dot(&d_pw);
        let gamma_pw = if denom_pw > 0.0 {
            (grad.dot(&d_pw) / denom_pw).clamp(0.0, weights[a_idx])
        } else {
            0.0
        };
        let dec_pw = 2.0 * gamma_pw * grad.dot(&d_pw) - gamma_pw * gamma_pw * denom_pw;
        // Candidate 2: classic step toward the LMO vertex.
        let d_fw = vertex(s_idx) - &x;
        let denom_fw = d_fw.dot(&d_fw);
        let t_fw = if denom_fw > 0.0 {
            (-grad.dot(&d_fw) / denom_fw).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let dec_fw = -2.0 * t_fw * grad.dot(&d_fw) - t_fw * t_fw * denom_fw;
        if dec_pw <= 0.0 && dec_fw <= 0.0 {
            break;
        }
        if dec_pw >= dec_fw {
            weights[a_idx] -= gamma_pw;
            weights[s_idx] += gamma_pw;
            x -= gamma_pw * d_pw;
        } else {
            for w in weights.iter_mut() {
                *w *= 1.0 - t_fw;
            }
            weights[s_idx] += t_fw;
            x += t_fw * d_fw;
        }
    }
    Ok((&x - &p).norm())
}

fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.max(d);
        }
    }
    best.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullScores {
    /// Fraction of synthetic points inside the hull of the real set.
    pub precision: f64,
    /// Fraction of real points inside the hull of the synthetic set.
    pub recall: f64,
    pub f_score: f64,
    pub tau: f64,
}

pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Project both sets with a shared PCA basis, then score hull membership
/// both ways. `tau` defaults to `1e-6` times the diameter of the pooled
/// projected points.
pub fn hull_precision_recall(
    real: &[Vec<f64>],
    synth: &[Vec<f64>],
    hull_dim: usize,
    tau: Option<f64>,
) -> Result<HullScores> {
    if real.len() < 2 || synth.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: real.len().min(synth.len()),
        });
    }
    let pooled: Vec<Vec<f64>> = real.iter().chain(synth).cloned().collect();
    let pca = PcaProjection::fit(&pooled, hull_dim)?;
    let real_p: Vec<Vec<f64>> = real.iter().map(|p| pca.project(p)).collect();
    let synth_p: Vec<Vec<f64>> = synth.iter().map(|p| pca.project(p)).collect();
    let pooled_p: Vec<Vec<f64>> = real_p.iter().chain(&synth_p).cloned().collect();
    let tau = tau.unwrap_or(TAU_DIAMETER_FACTOR * diameter(&pooled_p));

    let inside_frac = |hull: &[Vec<f64>], queries: &[Vec<f64>]| -> Result<f64> {
        let mut inside = 0usize;
        for q in queries {
            if hull_residual(hull, q)? <= tau {
                inside += 1;
            }
        }
        Ok(inside as f64 / queries.len() as f64)
    };
    let precision = inside_frac(&real_p, &synth_p)?;
    let recall = inside_frac(&synth_p, &real_p)?;
    Ok(HullScores {
        precision,
        recall,
        f_score: f_score(precision, recall),
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoding::Rng;

    /// 2D LP-feasibility oracle: a point is outside the hull iff some line
    /// through a pair of set points separates it from every set point.
    fn outside_2d(set: &[Vec<f64>], q: &[f64], slack: f64) -> bool {
        for (i, a) in set.iter().enumerate() {
            for b in &set[i + 1..] {
                let nx = -(b[1] - a[1]);
                let ny = b[0] - a[0];
                if nx == 0.0 && ny == 0.0 {
                    continue;
                }
                for sign in [1.0, -1.0] {
                    let side = |p: &[f64]| sign * (nx * (p[0] - a[0]) + ny * (p[1] - a[1]));
                    if side(q) > slack && set.iter().all(|p| side(p) <= slack) {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn square() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ]
    }

    #[test]
    fn residual_zero_inside_square() {
        let s = square();
        assert!(hull_residual(&s, &[0.5, 0.5]).unwrap() < 1e-7);
        assert!(hull_residual(&s, &[0.0, 0.0]).unwrap() < 1e-7);
        // On an edge: the gap stop of 1e-10 only bounds the residual by
        // its square root.
        assert!(hull_residual(&s, &[1.0, 0.3]).unwrap() < 1e-5);
    }

    #[test]
    fn residual_is_euclidean_distance_outside() {
        let s = square();
        // Nearest hull point to (2,2) is the corner (1,1).
        let r = hull_residual(&s, &[2.0, 2.0]).unwrap();
        assert!((r - 2.0f64.sqrt()).abs() < 1e-6);
        // Nearest hull point to (0.5,-1) is the edge point (0.5,0).
        let r = hull_residual(&s, &[0.5, -1.0]).unwrap();
        assert!((r - 1.0).abs() < 1e-6);
    }

    #[test]
    fn square_corner_example() {
        // Synthetic {(0.5,0.5),(2,2)}: one point inside the square, so
        // precision 0.5. Of the corners only (1,1) lies on the synthetic
        // segment, so recall 0.25.
        let real = square();
        let synth = vec![vec![0.5, 0.5], vec![2.0, 2.0]];
        let scores = hull_precision_recall(&real, &synth, 2, None).unwrap();
        assert_eq!(scores.precision, 0.5);
        assert_eq!(scores.recall, 0.25);
        let expected_f = f_score(0.5, 0.25);
        assert!((scores.f_score - expected_f).abs() < 1e-12);
    }

    #[test]
    fn f_score_zero_when_both_zero() {
        assert_eq!(f_score(0.0, 0.0), 0.0);
        assert!((f_score(1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn agrees_with_lp_oracle_in_2d() {
        let mut rng = Rng::new(31);
        for _ in 0..20 {
            let set: Vec<Vec<f64>> = (0..8)
                .map(|_| vec![rng.next_f64() * 2.0 - 1.0, rng.next_f64() * 2.0 - 1.0])
                .collect();
            for _ in 0..20 {
                let q = [rng.next_f64() * 3.0 - 1.5, rng.next_f64() * 3.0 - 1.5];
                let r = hull_residual(&set, &q).unwrap();
                let tau = 1e-5;
                if r > 10.0 * tau {
                    assert!(outside_2d(&set, &q, 0.0), "residual {r} but oracle says inside");
                } else if r <= tau {
                    assert!(!outside_2d(&set, &q, tau), "residual {r} but oracle says outside");
                }
            }
        }
    }

    #[test]
    fn rotation_invariance() {
        let real: Vec<Vec<f64>> = {
            let mut rng = Rng::new(4);
            (0..15)
                .map(|_| vec![rng.next_f64(), rng.next_f64()])
                .collect()
        };
        let synth: Vec<Vec<f64>> = {
            let mut rng = Rng::new(5);
            (0..15)
                .map(|_| vec![rng.next_f64() * 1.4 - 0.2, rng.next_f64() * 1.4 - 0.2])
                .collect()
        };
        let base = hull_precision_recall(&real, &synth, 2, None).unwrap();
        let theta: f64 = 0.7;
        let rot = |p: &Vec<f64>| {
            vec![
                p[0] * theta.cos() - p[1] * theta.sin(),
                p[0] * theta.sin() + p[1] * theta.cos(),
            ]
        };
        let real_r: Vec<Vec<f64>> = real.iter().map(rot).collect();
        let synth_r: Vec<Vec<f64>> = synth.iter().map(rot).collect();
        let rotated = hull_precision_recall(&real_r, &synth_r, 2, None).unwrap();
        assert_eq!(base.precision, rotated.precision);
        assert_eq!(base.recall, rotated.recall);
    }

    #[test]
    fn identical_sets_score_perfectly() {
        let mut rng = Rng::new(12);
        let set: Vec<Vec<f64>> = (0..20)
            .map(|_| vec![rng.next_f64(), rng.next_f64(), rng.next_f64()])
            .collect();
        let s = hull_precision_recall(&set, &set, 3, None).unwrap();
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 1.0);
        assert_eq!(s.f_score, 1.0);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let one = vec![vec![0.0, 0.0]];
        let many = square();
        assert!(matches!(
            hull_precision_recall(&one, &many, 2, None),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn pca_projection_preserves_planar_geometry() {
        // Points on a plane embedded in 5D: projecting to 2 dims keeps
        // pairwise distances.
        let mut rng = Rng::new(3);
        let basis = [
            [1.0, 0.0, 1.0, 0.0, 1.0],
            [0.0, 1.0, 0.0, 1.0, 0.0],
        ];
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|_| {
                let (a, b) = (rng.next_f64(), rng.next_f64());
                (0..5).map(|i| a * basis[0][i] + b * basis[1][i]).collect()
            })
            .collect();
        let pca = PcaProjection::fit(&pts, 2).unwrap();
        let proj: Vec<Vec<f64>> = pts.iter().map(|p| pca.project(p)).collect();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d5: f64 = pts[i]
                    .iter()
                    .zip(&pts[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let d2: f64 = proj[i]
                    .iter()
                    .zip(&proj[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                assert!((d5 - d2).abs() < 1e-9);
            }
        }
    }
}
