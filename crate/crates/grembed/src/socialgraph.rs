//! The implicit weighted graph: friendship edges re-weighted by taste
//! similarity between endpoint users.
//!
//! The weight of an edge (i, j) is
//!
//! ```text
//! W_ij = (|L_i ∩ L_j| + |D_i ∩ D_j|) / |L_i ∪ L_j ∪ D_i ∪ D_j|
//! ```
//!
//! where L and D are the liked/disliked item sets from the ratings table.
//! The denominator normalizes away users who simply rated a lot.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{FriendshipList, RatingsTable};
use crate::numerics::matrix::{format_f64, SparseMatrix};
use crate::types::{BusinessId, UserId};

/// Undirected weighted user graph with dense node indices and sorted
/// neighbor lists.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    ids: Vec<UserId>,
    index_of: BTreeMap<UserId, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub avg_degree: f64,
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[UserId] {
        &self.ids
    }

    pub fn id_of(&self, index: usize) -> &UserId {
        &self.ids[index]
    }

    pub fn index_of(&self, user: &UserId) -> Option<usize> {
        self.index_of.get(user).copied()
    }

    pub fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adjacency[index]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search_by_key(&b, |&(j, _)| j).is_ok()
    }

    pub fn weighted_degree(&self, index: usize) -> f64 {
        self.adjacency[index].iter().map(|&(_, w)| w).sum()
    }

    /// Builds from unordered-pair edges over the given node set; node order
    /// (and hence dense indices) follows sorted user ids.
    pub fn from_edges(edges: &BTreeMap<(UserId, UserId), f64>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut nodes: BTreeSet<&UserId> = BTreeSet::new();
        for (a, b) in edges.keys() {
            nodes.insert(a);
            nodes.insert(b);
        }
        let ids: Vec<UserId> = nodes.into_iter().cloned().collect();
        let index_of: BTreeMap<UserId, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ids.len()];
        for ((a, b), &w) in edges {
            let (ia, ib) = (index_of[a], index_of[b]);
            adjacency[ia].push((ib, w));
            adjacency[ib].push((ia, w));
        }
        for list in adjacency.iter_mut() {
            list.sort_by_key(|&(j, _)| j);
        }
        Ok(WeightedGraph {
            ids,
            index_of,
            adjacency,
        })
    }

    /// Adjacency matrix as CSR.
    pub fn adjacency_matrix(&self) -> SparseMatrix {
        let n = self.n();
        SparseMatrix::from_triplets(
            n,
            n,
            (0..n).flat_map(|i| {
                self.adjacency[i]
                    .iter()
                    .map(move |&(j, w)| (i, j, w))
                    .collect::<Vec<_>>()
            }),
        )
    }

    /// Number of connected components (BFS over the undirected edges).
    pub fn component_count(&self) -> usize {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut queue = vec![start];
            seen[start] = true;
            while let Some(v) = queue.pop() {
                for &(u, _) in &self.adjacency[v] {
                    if !seen[u] {
                        seen[u] = true;
                        queue.push(u);
                    }
                }
            }
        }
        components
    }

    /// TSV edge list with a `# nodes=<n> edges=<m>` header, one line per
    /// unordered pair, 17 significant digits (round-trips exactly).
    pub fn to_tsv_string(&self) -> String {
        let stats = graph_stats(self);
        let mut s = String::new();
        let _ = writeln!(s, "# nodes={} edges={}", stats.nodes, stats.edges);
        for i in 0..self.n() {
            for &(j, w) in &self.adjacency[i] {
                if i < j {
                    let _ = writeln!(
                        s,
                        "{}\t{}\t{}",
                        self.ids[i].as_str(),
                        self.ids[j].as_str(),
                        format_f64(w)
                    );
                }
            }
        }
        s
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv_string())?;
        Ok(())
    }

    pub fn from_tsv_string(s: &str) -> Result<Self> {
        let mut edges: BTreeMap<(UserId, UserId), f64> = BTreeMap::new();
        for (idx, line) in s.lines().enumerate() {
            let line_no = idx + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::MalformedLine {
                    line: line_no,
                    msg: "expected `user<TAB>user<TAB>weight`".into(),
                });
            }
            let w = fields[2].parse::<f64>().map_err(|e| Error::MalformedLine {
                line: line_no,
                msg: format!("bad weight: {e}"),
            })?;
            let a = UserId::new(fields[0]);
            let b = UserId::new(fields[1]);
            let key = if a < b { (a, b) } else { (b, a) };
            edges.insert(key, w);
        }
        WeightedGraph::from_edges(&edges)
    }

    pub fn load_tsv(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        Self::from_tsv_string(&std::fs::read_to_string(path)?)
    }
}

/// Taste similarity of two users from their liked/disliked sets. Returns 0
/// when both users have rated nothing.
pub fn similarity_weight(
    liked_i: &BTreeSet<BusinessId>,
    disliked_i: &BTreeSet<BusinessId>,
    liked_j: &BTreeSet<BusinessId>,
    disliked_j: &BTreeSet<BusinessId>,
) -> f64 {
    debug_assert!(liked_i.is_disjoint(disliked_i));
    debug_assert!(liked_j.is_disjoint(disliked_j));
    let shared_likes = liked_i.intersection(liked_j).count();
    let shared_dislikes = disliked_i.intersection(disliked_j).count();
    let mut union: BTreeSet<&BusinessId> = BTreeSet::new();
    union.extend(liked_i);
    union.extend(liked_j);
    union.extend(disliked_i);
    union.extend(disliked_j);
    if union.is_empty() {
        return 0.0;
    }
    (shared_likes + shared_dislikes) as f64 / union.len() as f64
}

/// Re-weights friendship edges between active users by taste similarity.
/// Zero-similarity edges get the floor weight `epsilon` (dropped when
/// epsilon is 0). Nodes without a retained edge are not part of the graph.
pub fn build_weighted_graph(
    friendships: &FriendshipList,
    ratings: &RatingsTable,
    active: &BTreeSet<UserId>,
    epsilon: f64,
) -> Result<WeightedGraph> {
    assert!(epsilon >= 0.0, "epsilon must be non-negative");
    let mut edges: BTreeMap<(UserId, UserId), f64> = BTreeMap::new();
    for (a, b) in friendships.iter() {
        if !active.contains(a) || !active.contains(b) {
            continue;
        }
        let w = similarity_weight(
            &ratings.liked_of(a),
            &ratings.disliked_of(a),
            &ratings.liked_of(b),
            &ratings.disliked_of(b),
        );
        let w = if w > 0.0 {
            w
        } else if epsilon > 0.0 {
            epsilon
        } else {
            continue;
        };
        edges.insert((a.clone(), b.clone()), w);
    }
    WeightedGraph::from_edges(&edges)
}

/// Node/edge counts and average degree (2E/N).
pub fn graph_stats(graph: &WeightedGraph) -> GraphStats {
    let nodes = graph.n();
    assert!(nodes > 0, "stats of an empty graph");
    let edges = graph
        .adjacency
        .iter()
        .map(|l| l.len())
        .sum::<usize>()
        / 2;
    GraphStats {
        nodes,
        edges,
        avg_degree: 2.0 * edges as f64 / nodes as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::build_ratings_table;
    use crate::ingest::Review;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<BusinessId> {
        items.iter().map(|&s| s.into()).collect()
    }

    #[test]
    fn identical_histories_give_weight_one() {
        let l = set(&["a", "b"]);
        let d = set(&["c"]);
        assert_eq!(similarity_weight(&l, &d, &l, &d), 1.0);
    }

    #[test]
    fn disjoint_histories_give_zero() {
        assert_eq!(
            similarity_weight(&set(&["a"]), &set(&[]), &set(&["b"]), &set(&[])),
            0.0
        );
    }

    #[test]
    fn mixed_history_hand_value() {
        // (1 shared like + 1 shared dislike) / |{a,b,c,d}| = 0.5
        let w = similarity_weight(&set(&["a", "b"]), &set(&["c"]), &set(&["a"]), &set(&["c", "d"]));
        assert_eq!(w, 0.5);
    }

    #[test]
    fn empty_histories_give_zero_not_nan() {
        assert_eq!(similarity_weight(&set(&[]), &set(&[]), &set(&[]), &set(&[])), 0.0);
    }

    #[test]
    fn shared_new_item_never_decreases_weight() {
        // adding an item liked by both users, new to the union
        let w_before =
            similarity_weight(&set(&["a"]), &set(&[]), &set(&["b"]), &set(&[]));
        let w_after =
            similarity_weight(&set(&["a", "z"]), &set(&[]), &set(&["b", "z"]), &set(&[]));
        assert!(w_after >= w_before);
    }

    proptest! {
        #[test]
        fn similarity_is_symmetric_and_bounded(
            li in proptest::collection::btree_set(0u8..20, 0..8),
            di in proptest::collection::btree_set(20u8..40, 0..8),
            lj in proptest::collection::btree_set(0u8..20, 0..8),
            dj in proptest::collection::btree_set(20u8..40, 0..8),
        ) {
            let conv = |s: &std::collections::BTreeSet<u8>| -> BTreeSet<BusinessId> {
                s.iter().map(|v| BusinessId::new(v.to_string())).collect()
            };
            let (li, di, lj, dj) = (conv(&li), conv(&di), conv(&lj), conv(&dj));
            let w_ij = similarity_weight(&li, &di, &lj, &dj);
            let w_ji = similarity_weight(&lj, &dj, &li, &di);
            prop_assert_eq!(w_ij, w_ji);
            prop_assert!((0.0..=1.0).contains(&w_ij));
        }
    }

    fn review(u: &str, b: &str, s: u8) -> Review {
        Review {
            user: u.into(),
            business: b.into(),
            stars: s,
        }
    }

    fn table(reviews: &[Review]) -> RatingsTable {
        let users: BTreeSet<UserId> = reviews.iter().map(|r| r.user.clone()).collect();
        build_ratings_table(reviews, &users, 4, 2)
    }

    #[test]
    fn identical_friends_build_a_unit_edge() {
        let reviews = vec![review("a", "x", 5), review("b", "x", 5)];
        let ratings = table(&reviews);
        let mut friends = FriendshipList::new();
        friends.insert("a".into(), "b".into());
        let active: BTreeSet<UserId> = ["a".into(), "b".into()].into();
        let g = build_weighted_graph(&friends, &ratings, &active, 0.0).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.neighbors(0), &[(1, 1.0)]);
    }

    #[test]
    fn disjoint_friends_with_zero_epsilon_empty_the_graph() {
        let reviews = vec![review("a", "x", 5), review("b", "y", 5)];
        let ratings = table(&reviews);
        let mut friends = FriendshipList::new();
        friends.insert("a".into(), "b".into());
        let active: BTreeSet<UserId> = ["a".into(), "b".into()].into();
        assert!(matches!(
            build_weighted_graph(&friends, &ratings, &active, 0.0),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn triangle_with_one_shared_item_and_epsilon_floor() {
        // a and b share one liked item out of 4 distinct items between them;
        // the other two pairs have nothing in common and fall to epsilon.
        let reviews = vec![
            review("a", "s", 5),
            review("a", "p", 5),
            review("b", "s", 5),
            review("b", "q", 5),
            review("c", "t", 5),
        ];
        let ratings = table(&reviews);
        let mut friends = FriendshipList::new();
        friends.insert("a".into(), "b".into());
        friends.insert("b".into(), "c".into());
        friends.insert("a".into(), "c".into());
        let active: BTreeSet<UserId> = ["a".into(), "b".into(), "c".into()].into();
        let g = build_weighted_graph(&friends, &ratings, &active, 0.001).unwrap();
        let ia = g.index_of(&"a".into()).unwrap();
        let ib = g.index_of(&"b".into()).unwrap();
        let ic = g.index_of(&"c".into()).unwrap();
        let weight = |x: usize, y: usize| {
            g.neighbors(x)
                .iter()
                .find(|&&(j, _)| j == y)
                .map(|&(_, w)| w)
                .unwrap()
        };
        // |{s}| + 0 over |{s,p,q}| -- a and b have 3 distinct items, w = 1/3
        assert!((weight(ia, ib) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(weight(ib, ic), 0.001);
        assert_eq!(weight(ia, ic), 0.001);
    }

    #[test]
    fn graph_invariants_hold_after_build() {
        let reviews = vec![
            review("a", "x", 5),
            review("b", "x", 5),
            review("c", "x", 5),
        ];
        let ratings = table(&reviews);
        let mut friends = FriendshipList::new();
        friends.insert("a".into(), "b".into());
        friends.insert("b".into(), "c".into());
        let active: BTreeSet<UserId> = ["a".into(), "b".into(), "c".into()].into();
        let g = build_weighted_graph(&friends, &ratings, &active, 0.001).unwrap();
        for i in 0..g.n() {
            let mut prev = None;
            for &(j, w) in g.neighbors(i) {
                assert_ne!(i, j, "self loop");
                assert!((0.0..=1.0).contains(&w));
                // symmetry
                let back = g
                    .neighbors(j)
                    .iter()
                    .find(|&&(k, _)| k == i)
                    .map(|&(_, w)| w);
                assert_eq!(back, Some(w));
                if let Some(p) = prev {
                    assert!(j > p, "neighbor list not sorted");
                }
                prev = Some(j);
            }
        }
    }

    #[test]
    fn stats_on_small_graphs() {
        let mut edges = BTreeMap::new();
        edges.insert((UserId::new("a"), UserId::new("b")), 1.0);
        let g = WeightedGraph::from_edges(&edges).unwrap();
        assert_eq!(
            graph_stats(&g),
            GraphStats {
                nodes: 2,
                edges: 1,
                avg_degree: 1.0
            }
        );

        let mut tri = BTreeMap::new();
        tri.insert((UserId::new("a"), UserId::new("b")), 1.0);
        tri.insert((UserId::new("b"), UserId::new("c")), 1.0);
        tri.insert((UserId::new("a"), UserId::new("c")), 1.0);
        let g = WeightedGraph::from_edges(&tri).unwrap();
        assert_eq!(
            graph_stats(&g),
            GraphStats {
                nodes: 3,
                edges: 3,
                avg_degree: 2.0
            }
        );
    }

    // Consistency check of the degree formula against the published size of
    // the preprocessed Yelp graph: 2 * 407495 / 14346 = 56.8096.
    #[test]
    fn average_degree_formula_matches_reference_graph() {
        let avg = 2.0 * 407_495.0 / 14_346.0;
        assert!((avg - 56.8096_f64).abs() < 5e-4, "avg {avg}");
    }

    #[test]
    fn tsv_round_trips_exactly() {
        let mut edges = BTreeMap::new();
        edges.insert((UserId::new("a"), UserId::new("b")), 1.0 / 3.0);
        edges.insert((UserId::new("b"), UserId::new("c")), 0.001);
        let g = WeightedGraph::from_edges(&edges).unwrap();
        let s = g.to_tsv_string();
        let back = WeightedGraph::from_tsv_string(&s).unwrap();
        assert_eq!(g, back);
        assert_eq!(s, back.to_tsv_string());
    }
}
