//! Node embeddings of the weighted social graph. Three methods share one
//! output contract: an n x D matrix of finite, non-degenerate rows plus a
//! user-to-row map.

pub mod hope;
pub mod sgns;
pub mod spectral;
pub mod walks;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::matrix::{format_f64, norm2, DenseMatrix};
use crate::types::UserId;

pub use hope::{hope_embed, katz_matrix, spectral_radius};
pub use sgns::train_sgns;
pub use spectral::spectral_embed;
pub use walks::{generate_walks, WalkCorpus};

/// A row norm at or below this is treated as a degenerate (all-zero) row.
const ZERO_ROW_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Node2vec,
    Spectral,
    Hope,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Node2vec => "node2vec",
            Method::Spectral => "spectral",
            Method::Hope => "hope",
        }
    }

    pub const ALL: [Method; 3] = [Method::Node2vec, Method::Spectral, Method::Hope];
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "node2vec" => Ok(Method::Node2vec),
            "spectral" => Ok(Method::Spectral),
            "hope" => Ok(Method::Hope),
            other => Err(format!("unknown embedding method `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub method: Method,
    pub dim: usize,
    pub vectors: DenseMatrix,
    ids: Vec<UserId>,
    index_of: BTreeMap<UserId, usize>,
}

impl Embedding {
    /// Validates the shared contract: finite entries and no numerically-zero
    /// row.
    pub fn new(method: Method, vectors: DenseMatrix, ids: Vec<UserId>) -> Result<Self> {
        assert_eq!(vectors.rows, ids.len());
        if !vectors.is_finite() {
            return Err(Error::SolverFailure("embedding contains non-finite values".into()));
        }
        for (i, id) in ids.iter().enumerate() {
            if norm2(vectors.row(i)) <= ZERO_ROW_TOL {
                return Err(Error::ZeroEmbeddingRow(id.as_str().to_string()));
            }
        }
        let index_of = ids
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();
        Ok(Embedding {
            method,
            dim: vectors.cols,
            vectors,
            ids,
            index_of,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[UserId] {
        &self.ids
    }

    pub fn index_of(&self, user: &UserId) -> Option<usize> {
        self.index_of.get(user).copied()
    }

    pub fn vector_of(&self, user: &UserId) -> Option<&[f64]> {
        self.index_of(user).map(|i| self.vectors.row(i))
    }

    /// CSV with header `user_id,dim0..dimK`, 17 significant digits per value.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        let header: Vec<String> = std::iter::once("user_id".to_string())
            .chain((0..self.dim).map(|d| format!("dim{d}")))
            .collect();
        let _ = writeln!(s, "{}", header.join(","));
        for (i, id) in self.ids.iter().enumerate() {
            let vals: Vec<String> = self.vectors.row(i).iter().map(|v| format_f64(*v)).collect();
            let _ = writeln!(s, "{},{}", id.as_str(), vals.join(","));
        }
        s
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_string(method: Method, s: &str) -> Result<Self> {
        let mut lines = s.lines();
        let header = lines.next().ok_or_else(|| Error::MalformedLine {
            line: 1,
            msg: "empty embedding file".into(),
        })?;
        let dim = header.split(',').count() - 1;
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            let mut fields = line.split(',');
            let id = fields.next().ok_or_else(|| Error::MalformedLine {
                line: line_no,
                msg: "missing user id".into(),
            })?;
            ids.push(UserId::new(id));
            for f in fields {
                data.push(f.parse::<f64>().map_err(|e| Error::MalformedLine {
                    line: line_no,
                    msg: format!("bad float `{f}`: {e}"),
                })?);
            }
        }
        let rows = ids.len();
        if data.len() != rows * dim {
            return Err(Error::MalformedLine {
                line: 1,
                msg: format!("expected {} values, found {}", rows * dim, data.len()),
            });
        }
        Embedding::new(method, DenseMatrix::from_vec(rows, dim, data), ids)
    }

    pub fn load_csv(method: Method, path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        Self::from_csv_string(method, &std::fs::read_to_string(path)?)
    }
}

/// Hyperparameters of the random-walk embedder.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Node2vecParams {
    pub p: f64,
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for Node2vecParams {
    fn default() -> Self {
        Node2vecParams {
            p: 1.0,
            q: 1.0,
            walks_per_node: 10,
            walk_length: 80,
            window: 10,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
        }
    }
}

/// Composition of walk generation and skip-gram training; deterministic
/// given the seed.
pub fn node2vec_embed(
    graph: &crate::socialgraph::WeightedGraph,
    d: usize,
    params: &Node2vecParams,
    seed: u64,
) -> Result<Embedding> {
    let corpus = generate_walks(
        graph,
        params.p,
        params.q,
        params.walks_per_node,
        params.walk_length,
        seed,
    );
    let (vectors, _losses) = train_sgns(
        &corpus,
        graph.n(),
        d,
        params.window,
        params.negatives,
        params.epochs,
        params.lr,
        seed.wrapping_add(1),
    );
    Embedding::new(Method::Node2vec, vectors, graph.ids().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::socialgraph::WeightedGraph;
    use crate::types::UserId;
    use std::collections::BTreeMap;

    fn two_cliques_with_bridge() -> WeightedGraph {
        let mut edges = BTreeMap::new();
        let name = |side: char, i: usize| UserId::new(format!("{side}{i:02}"));
        for side in ['a', 'b'] {
            for i in 0..10 {
                for j in (i + 1)..10 {
                    edges.insert((name(side, i), name(side, j)), 1.0);
                }
            }
        }
        edges.insert((name('a', 0), name('b', 0)), 1.0);
        WeightedGraph::from_edges(&edges).unwrap()
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        crate::numerics::matrix::dot(a, b)
            / (crate::numerics::matrix::norm2(a) * crate::numerics::matrix::norm2(b))
    }

    #[test]
    fn node2vec_separates_two_cliques() {
        let g = two_cliques_with_bridge();
        let params = Node2vecParams {
            walks_per_node: 10,
            walk_length: 40,
            window: 5,
            epochs: 5,
            ..Node2vecParams::default()
        };
        let emb = node2vec_embed(&g, 8, &params, 42).unwrap();
        let rows: Vec<&[f64]> = (0..g.n()).map(|i| emb.vectors.row(i)).collect();
        let side = |i: usize| g.id_of(i).as_str().starts_with('a');
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for i in 0..g.n() {
            for j in (i + 1)..g.n() {
                let c = cosine(rows[i], rows[j]);
                if side(i) == side(j) {
                    intra.push(c);
                } else {
                    inter.push(c);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&intra) > mean(&inter),
            "intra {} <= inter {}",
            mean(&intra),
            mean(&inter)
        );
    }

    #[test]
    fn node2vec_emits_requested_dimension() {
        let g = two_cliques_with_bridge();
        let emb = node2vec_embed(
            &g,
            25,
            &Node2vecParams {
                walks_per_node: 2,
                walk_length: 10,
                epochs: 1,
                ..Node2vecParams::default()
            },
            7,
        )
        .unwrap();
        assert_eq!(emb.vectors.cols, 25);
        assert_eq!(emb.dim, 25);
    }

    #[test]
    fn node2vec_is_bit_deterministic() {
        let g = two_cliques_with_bridge();
        let params = Node2vecParams {
            walks_per_node: 3,
            walk_length: 20,
            epochs: 2,
            ..Node2vecParams::default()
        };
        let a = node2vec_embed(&g, 8, &params, 99).unwrap();
        let b = node2vec_embed(&g, 8, &params, 99).unwrap();
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn embedding_csv_round_trips() {
        let g = two_cliques_with_bridge();
        let emb = node2vec_embed(
            &g,
            4,
            &Node2vecParams {
                walks_per_node: 2,
                walk_length: 10,
                epochs: 1,
                ..Node2vecParams::default()
            },
            1,
        )
        .unwrap();
        let s = emb.to_csv_string();
        let back = Embedding::from_csv_string(Method::Node2vec, &s).unwrap();
        assert_eq!(emb, back);
    }

    #[test]
    fn zero_rows_are_rejected() {
        let ids = vec![UserId::new("a"), UserId::new("b")];
        let m = DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            Embedding::new(Method::Hope, m, ids),
            Err(Error::ZeroEmbeddingRow(_))
        ));
    }
}
