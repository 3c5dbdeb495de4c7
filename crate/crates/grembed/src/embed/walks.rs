//! Second-order biased random walks over the weighted graph.
//!
//! From a step (t -> v), the unnormalized probability of moving to x is
//! w(v,x)/p when x returns to t, w(v,x) when x also neighbors t, and
//! w(v,x)/q otherwise. p trades off immediate backtracking, q trades off
//! outward exploration, interpolating between BFS- and DFS-like behavior.

use crate::numerics::rng::Rng;
use crate::socialgraph::WeightedGraph;

#[derive(Clone, Debug)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<usize>>,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub p: f64,
    pub q: f64,
}

/// Samples `walks_per_node` walks from every node that has a neighbor. Each
/// node owns an RNG substream derived from (seed, node index), so the output
/// does not depend on traversal or scheduling order.
pub fn generate_walks(
    graph: &WeightedGraph,
    p: f64,
    q: f64,
    walks_per_node: usize,
    walk_length: usize,
    seed: u64,
) -> WalkCorpus {
    assert!(p > 0.0 && q > 0.0, "p and q must be positive");
    assert!(walk_length >= 2, "walk_length must be at least 2");
    let mut walks = Vec::new();
    for start in 0..graph.n() {
        if graph.neighbors(start).is_empty() {
            continue;
        }
        let mut rng = Rng::substream(seed, start as u64);
        for _ in 0..walks_per_node {
            walks.push(sample_walk(graph, start, p, q, walk_length, &mut rng));
        }
    }
    WalkCorpus {
        walks,
        walk_length,
        walks_per_node,
        p,
        q,
    }
}

fn sample_walk(
    graph: &WeightedGraph,
    start: usize,
    p: f64,
    q: f64,
    walk_length: usize,
    rng: &mut Rng,
) -> Vec<usize> {
    let mut walk = Vec::with_capacity(walk_length);
    walk.push(start);
    let first_neighbors = graph.neighbors(start);
    if first_neighbors.is_empty() {
        return walk;
    }
    // first hop: plain weighted choice
    let weights: Vec<f64> = first_neighbors.iter().map(|&(_, w)| w).collect();
    let pick = rng.weighted_index(&weights);
    walk.push(first_neighbors[pick].0);

    while walk.len() < walk_length {
        let prev = walk[walk.len() - 2];
        let cur = walk[walk.len() - 1];
        let neighbors = graph.neighbors(cur);
        if neighbors.is_empty() {
            break; // dead end truncates the walk
        }
        let weights: Vec<f64> = neighbors
            .iter()
            .map(|&(x, w)| {
                if x == prev {
                    w / p
                } else if graph.has_edge(prev, x) {
                    w
                } else {
                    w / q
                }
            })
            .collect();
        let pick = rng.weighted_index(&weights);
        walk.push(neighbors[pick].0);
    }
    walk
}
