//! Truncated singular value decomposition via one-sided Jacobi.
//!
//! One-sided Jacobi rotates column pairs of the input until all columns are
//! mutually orthogonal; column norms are then the singular values. Accurate
//! to working precision and simple to reason about, which is all the Katz
//! factorization needs at the graph sizes this crate targets.

use crate::error::{Error, Result};
use crate::numerics::matrix::{dot, norm2, DenseMatrix};
use crate::numerics::rng::Rng;

/// Rank-d truncated SVD: returns (U: n x d, singular values descending,
/// V: m x d) with orthonormal columns.
pub fn truncated_svd(a: &DenseMatrix, d: usize) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    assert!(d >= 1 && d <= a.rows.min(a.cols), "need 1 <= d <= min(rows, cols)");
    if a.rows >= a.cols {
        let (u, s, v) = one_sided_jacobi(a, d)?;
        Ok((u, s, v))
    } else {
        let (u, s, v) = one_sided_jacobi(&a.transpose(), d)?;
        Ok((v, s, u))
    }
}

/// Assumes rows >= cols. Works on a copy of the columns, accumulating the
/// right singular vectors from the rotations.
fn one_sided_jacobi(a: &DenseMatrix, d: usize) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let n = a.rows;
    let m = a.cols;
    let mut cols: Vec<Vec<f64>> = (0..m).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();

    let max_sweeps = 60;
    let tol = 1e-14;
    let mut converged = false;
    for _sweep in 0..max_sweeps {
        let mut max_off = 0.0f64;
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = dot(&cols[p], &cols[q]);
                let app = dot(&cols[p], &cols[p]);
                let aqq = dot(&cols[q], &cols[q]);
                let denom = (app * aqq).sqrt();
                if denom <= 0.0 {
                    continue;
                }
                let ratio = apq.abs() / denom;
                max_off = max_off.max(ratio);
                if ratio <= tol {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let cp = cols[p][i];
                    let cq = cols[q][i];
                    cols[p][i] = c * cp - s * cq;
                    cols[q][i] = s * cp + c * cq;
                }
                for i in 0..m {
                    let vp = v[p][i];
                    let vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if max_off <= tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: max_sweeps,
        });
    }

    let mut order: Vec<usize> = (0..m).collect();
    let norms: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut s_vals = Vec::with_capacity(d);
    let mut v_cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut rng = Rng::seeded(0x5fd0_71e3);
    for &j in order.iter().take(d) {
        let sigma = norms[j];
        s_vals.push(sigma);
        if sigma > 1e-300 {
            u_cols.push(cols[j].iter().map(|x| x / sigma).collect());
        } else {
            // Rank-deficient tail: fill with any unit vector orthogonal to
            // the accepted left singular vectors so U stays orthonormal.
            let mut w: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
            for _ in 0..2 {
                for u in &u_cols {
                    let c = dot(&w, u);
                    for (wi, ui) in w.iter_mut().zip(u) {
                        *wi -= c * ui;
                    }
                }
            }
            let nw = norm2(&w);
            u_cols.push(w.iter().map(|x| x / nw).collect());
        }
        v_cols.push(v[j].clone());
    }

    let mut u_mat = DenseMatrix::zeros(n, d);
    let mut v_mat = DenseMatrix::zeros(m, d);
    for (cidx, (uc, vc)) in u_cols.iter().zip(&v_cols).enumerate() {
        for i in 0..n {
            u_mat[(i, cidx)] = uc[i];
        }
        for i in 0..m {
            v_mat[(i, cidx)] = vc[i];
        }
    }
    Ok((u_mat, s_vals, v_mat))
}
