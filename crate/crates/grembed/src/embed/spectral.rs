//! Laplacian eigenmap embedding.
//!
//! Coordinates are the eigenvectors of the symmetric normalized Laplacian
//! L_sym = I - D^{-1/2} W D^{-1/2} with the 2nd..(d+1)th smallest
//! eigenvalues; the trivial constant-direction eigenvector is skipped.

use crate::error::{Error, Result};
use crate::numerics::eigen::symmetric_eigs_smallest;
use crate::numerics::matrix::{DenseMatrix, SparseMatrix};
use crate::socialgraph::WeightedGraph;

use super::{Embedding, Method};

/// L_sym of the graph as CSR.
pub fn normalized_laplacian(graph: &WeightedGraph) -> SparseMatrix {
    let n = graph.n();
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| {
            let d = graph.weighted_degree(i);
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut triplets = Vec::new();
    for i in 0..n {
        triplets.push((i, i, 1.0));
        for &(j, w) in graph.neighbors(i) {
            triplets.push((i, j, -w * inv_sqrt_deg[i] * inv_sqrt_deg[j]));
        }
    }
    SparseMatrix::from_triplets(n, n, triplets)
}

/// Embeds the graph in d dimensions. With `strict` set, a disconnected
/// graph is an error; otherwise extra zero-eigenvalue coordinates act as
/// component indicators.
pub fn spectral_embed(graph: &WeightedGraph, d: usize, strict: bool) -> Result<Embedding> {
    let n = graph.n();
    assert!(d < n, "need d < n to skip the trivial eigenvector");
    let components = graph.component_count();
    if strict && components >= 2 {
        return Err(Error::DisconnectedGraph { components });
    }
    let lap = normalized_laplacian(graph);
    let (_values, vectors) = symmetric_eigs_smallest(&lap, d + 1)?;
    let mut coords = DenseMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            coords[(i, j)] = vectors[(i, j + 1)];
        }
    }
    Embedding::new(Method::Spectral, coords, graph.ids().to_vec())
}
