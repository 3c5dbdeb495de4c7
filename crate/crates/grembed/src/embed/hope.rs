//! Higher-order proximity embedding from the Katz index.
//!
//! The proximity matrix is S = sum_{k>=1} beta^k W^k = (I - beta W)^{-1} beta W,
//! computed by a dense LU solve at graph scale, then factored with the
//! truncated SVD. The embedding is U sqrt(diag(sigma)); for an undirected
//! graph S is symmetric, so the target factors carry no extra information.

use crate::error::{Error, Result};
use crate::numerics::matrix::{norm2, DenseMatrix};
use crate::numerics::rng::Rng;
use crate::numerics::svd::truncated_svd;
use crate::socialgraph::WeightedGraph;

use super::{Embedding, Method};

/// Spectral radius of the (symmetric) adjacency matrix by power iteration.
pub fn spectral_radius(graph: &WeightedGraph) -> f64 {
    let n = graph.n();
    let mut rng = Rng::seeded(0x7a3d_9b11);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    let mut w = vec![0.0; n];
    for _ in 0..200 {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = graph
                .neighbors(i)
                .iter()
                .map(|&(j, wt)| wt * v[j])
                .sum();
        }
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next_lambda = nw;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if (next_lambda - lambda).abs() <= 1e-12 * next_lambda.max(1.0) {
            return next_lambda;
        }
        lambda = next_lambda;
    }
    lambda
}

/// Dense Katz matrix S = (I - beta W)^{-1} beta W. Errors when the series
/// diverges (beta >= 1/rho) or the solve breaks down.
pub fn katz_matrix(graph: &WeightedGraph, beta: f64) -> Result<DenseMatrix> {
    let rho = spectral_radius(graph);
    if beta * rho >= 1.0 {
        return Err(Error::BetaTooLarge { beta, rho });
    }
    let n = graph.n();
    let mut m = DenseMatrix::identity(n); // I - beta W
    let mut bw = DenseMatrix::zeros(n, n); // beta W
    for i in 0..n {
        for &(j, w) in graph.neighbors(i) {
            m[(i, j)] -= beta * w;
            bw[(i, j)] = beta * w;
        }
    }
    solve_multi(&m, &bw)
}

/// Solves A X = B by LU with partial pivoting; B's columns are the
/// right-hand sides.
fn solve_multi(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.rows, n);
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut pivot = col;
        let mut best = lu[(col, col)].abs();
        for r in (col + 1)..n {
            let v = lu[(r, col)].abs();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::SolverFailure(format!(
                "singular pivot at column {col}"
            )));
        }
        if pivot != col {
            perm.swap(pivot, col);
            for c in 0..n {
                let tmp = lu[(col, c)];
                lu[(col, c)] = lu[(pivot, c)];
                lu[(pivot, c)] = tmp;
            }
        }
        let diag = lu[(col, col)];
        for r in (col + 1)..n {
            let factor = lu[(r, col)] / diag;
            lu[(r, col)] = factor;
            for c in (col + 1)..n {
                let v = lu[(col, c)];
                lu[(r, c)] -= factor * v;
            }
        }
    }
    let mut x = DenseMatrix::zeros(n, b.cols);
    let mut y = vec![0.0; n];
    for rhs in 0..b.cols {
        for i in 0..n {
            let mut v = b[(perm[i], rhs)];
            for k in 0..i {
                v -= lu[(i, k)] * y[k];
            }
            y[i] = v;
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in (i + 1)..n {
                v -= lu[(i, k)] * x[(k, rhs)];
            }
            x[(i, rhs)] = v / lu[(i, i)];
        }
    }
    Ok(x)
}

/// Katz-proximity embedding of rank d: U sqrt(diag(sigma)) from the
/// truncated SVD of S.
pub fn hope_embed(graph: &WeightedGraph, d: usize, beta: f64) -> Result<Embedding> {
    let s = katz_matrix(graph, beta)?;
    let (u, sigma, _v) = truncated_svd(&s, d)?;
    let mut coords = u;
    for j in 0..d {
        let scale = sigma[j].max(0.0).sqrt();
        for i in 0..coords.rows {
            coords[(i, j)] *= scale;
        }
    }
    Embedding::new(Method::Hope, coords, graph.ids().to_vec())
}

/// Default decay: half the divergence limit.
pub fn default_beta(graph: &WeightedGraph) -> f64 {
    let rho = spectral_radius(graph);
    if rho > 0.0 {
        0.5 / rho
    } else {
        0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::Rng;
    use crate::types::UserId;
    use std::collections::BTreeMap;

    fn graph(edges: &[(&str, &str, f64)]) -> WeightedGraph {
        let mut m = BTreeMap::new();
        for &(a, b, w) in edges {
            m.insert((UserId::new(a), UserId::new(b)), w);
        }
        WeightedGraph::from_edges(&m).unwrap()
    }

    /// Brute-force partial sum of the Katz series, the independent route.
    fn katz_series_oracle(graph: &WeightedGraph, beta: f64, terms: usize) -> DenseMatrix {
        let n = graph.n();
        let mut w = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for &(j, wt) in graph.neighbors(i) {
                w[(i, j)] = wt;
            }
        }
        let mut power = w.clone();
        let mut sum = DenseMatrix::zeros(n, n);
        let mut scale = beta;
        for _ in 0..terms {
            for i in 0..n {
                for j in 0..n {
                    sum[(i, j)] += scale * power[(i, j)];
                }
            }
            power = power.matmul(&w);
            scale *= beta;
        }
        sum
    }

    #[test]
    fn single_edge_katz_matches_series() {
        let g = graph(&[("a", "b", 1.0)]);
        let s = katz_matrix(&g, 0.5).unwrap();
        let oracle = katz_series_oracle(&g, 0.5, 50);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (s[(i, j)] - oracle[(i, j)]).abs() <= 1e-10,
                    "S[{i}{j}] {} vs {}",
                    s[(i, j)],
                    oracle[(i, j)]
                );
            }
        }
        // closed form for a single unit edge with beta=1/2:
        // S = [[1/3, 2/3], [2/3, 1/3]]
        assert!((s[(0, 0)] - 1.0 / 3.0).abs() < 1e-12);
        assert!((s[(0, 1)] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn divergent_beta_is_rejected() {
        let g = graph(&[("a", "b", 1.0)]);
        // rho = 1 for a single unit edge
        assert!(matches!(
            katz_matrix(&g, 1.0),
            Err(Error::BetaTooLarge { .. })
        ));
    }

    #[test]
    fn epsilon_only_graph_trips_the_zero_row_check() {
        // all weights are vanishingly small and beta is fixed, so S ~ 0 and
        // every embedding row collapses below the tolerance
        let g = graph(&[("a", "b", 1e-30), ("b", "c", 1e-30)]);
        assert!(matches!(
            hope_embed(&g, 2, 0.5),
            Err(Error::ZeroEmbeddingRow(_))
        ));
    }

    #[test]
    fn katz_matrix_is_symmetric_and_factors_agree() {
        let mut edges = Vec::new();
        let mut rng = Rng::seeded(4);
        let names: Vec<String> = (0..12).map(|i| format!("n{i:02}")).collect();
        for i in 0..12 {
            for j in (i + 1)..12 {
                if rng.uniform() < 0.4 {
                    edges.push((names[i].as_str(), names[j].as_str(), 0.2 + rng.uniform()));
                }
            }
        }
        let g = graph(&edges);
        let beta = default_beta(&g);
        let s = katz_matrix(&g, beta).unwrap();
        for i in 0..g.n() {
            for j in 0..g.n() {
                assert!((s[(i, j)] - s[(j, i)]).abs() < 1e-10);
            }
        }
        // symmetric S: |U| and |V| agree on a non-degenerate spectrum
        let (u, _sig, v) = truncated_svd(&s, 4).unwrap();
        let mut diff = 0.0;
        for i in 0..g.n() {
            for j in 0..4 {
                let d = u[(i, j)].abs() - v[(i, j)].abs();
                diff += d * d;
            }
        }
        assert!(diff.sqrt() <= 1e-6, "||U|-|V|| = {}", diff.sqrt());
    }

    #[test]
    fn reconstruction_error_matches_oracle_svd() {
        let mut edges = Vec::new();
        let mut rng = Rng::seeded(30);
        let names: Vec<String> = (0..30).map(|i| format!("n{i:02}")).collect();
        for i in 0..30 {
            for j in (i + 1)..30 {
                if rng.uniform() < 0.25 {
                    edges.push((names[i].as_str(), names[j].as_str(), 0.1 + rng.uniform()));
                }
            }
        }
        let g = graph(&edges);
        let beta = default_beta(&g);
        let s = katz_matrix(&g, beta).unwrap();
        let d = 16;
        let (u, sig, v) = truncated_svd(&s, d).unwrap();
        // reconstruction residual of rank-16 factors
        let mut resid = 0.0;
        for i in 0..g.n() {
            for j in 0..g.n() {
                let mut approx = 0.0;
                for c in 0..d {
                    approx += u[(i, c)] * sig[c] * v[(j, c)];
                }
                resid += (s[(i, j)] - approx) * (s[(i, j)] - approx);
            }
        }
        let rel = resid.sqrt() / s.frobenius_norm();
        // Eckart-Young optimum from the trailing singular values of S
        let full = truncated_svd(&s, g.n()).unwrap().1;
        let opt: f64 = full[d..].iter().map(|x| x * x).sum::<f64>().sqrt() / s.frobenius_norm();
        assert!(rel <= opt + 1e-6, "rel {rel} vs optimum {opt}");
    }
}
