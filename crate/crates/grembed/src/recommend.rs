//! Per-embedding recommendation: cluster-restricted nearest neighbors vote
//! for the restaurants they rated high.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use crate::cluster::{predict_cluster, Clustering};
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::ingest::RatingsTable;
use crate::numerics::matrix::euclidean_distance;
use crate::socialgraph::WeightedGraph;
use crate::types::{BusinessId, UserId};

/// The "actual recommended set": what each user rated high in the source
/// data.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub high_rated: BTreeMap<UserId, BTreeSet<BusinessId>>,
}

impl GroundTruth {
    /// All liked sets from the ratings table.
    pub fn from_ratings(ratings: &RatingsTable) -> Self {
        GroundTruth {
            high_rated: ratings.liked.clone(),
        }
    }

    pub fn of(&self, user: &UserId) -> Option<&BTreeSet<BusinessId>> {
        self.high_rated.get(user)
    }
}

/// Ranked items with neighbor-vote weights, weight-descending and
/// id-ascending within ties.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedRecommendations {
    pub user: UserId,
    pub items: Vec<(BusinessId, u32)>,
}

impl WeightedRecommendations {
    pub fn item_ids(&self) -> Vec<BusinessId> {
        self.items.iter().map(|(b, _)| b.clone()).collect()
    }
}

/// Users ranked by weighted degree (descending, id-ascending ties); the
/// first `count` are returned.
pub fn select_top_users(graph: &WeightedGraph, count: usize) -> Vec<UserId> {
    assert!(count <= graph.n());
    let mut order: Vec<usize> = (0..graph.n()).collect();
    order.sort_by(|&a, &b| {
        graph
            .weighted_degree(b)
            .partial_cmp(&graph.weighted_degree(a))
            .unwrap()
            .then_with(|| graph.id_of(a).cmp(graph.id_of(b)))
    });
    order
        .into_iter()
        .take(count)
        .map(|i| graph.id_of(i).clone())
        .collect()
}

/// Users whose high-rated set size lies in [lower, upper]. The lower bound
/// keeps intersections non-empty; the upper bound stops prolific raters from
/// dominating every vote.
pub fn eligible_recommenders(
    ground_truth: &GroundTruth,
    lower: usize,
    upper: usize,
) -> BTreeSet<UserId> {
    assert!(1 <= lower && lower <= upper);
    ground_truth
        .high_rated
        .iter()
        .filter(|(_, set)| (lower..=upper).contains(&set.len()))
        .map(|(u, _)| u.clone())
        .collect()
}

/// Neighbor-vote recommendation for one user:
/// 1. predict the user's cluster;
/// 2. candidates are eligible users in that cluster (minus the user);
/// 3. keep the `n_neighbors` nearest by Euclidean distance (id-ascending
///    ties), or all if the cluster is smaller;
/// 4. weight each restaurant by how many chosen neighbors rated it high;
/// 5. optionally drop the user's own high-rated items;
/// 6. sort weight-descending / id-ascending, truncate to k.
///
/// `exclude_own` is on for serving (recommending what the user already
/// visited is vacuous) and off for offline evaluation, where hits against
/// the user's own high-rated set are the measurement.
#[allow(clippy::too_many_arguments)]
pub fn recommend_for_user(
    user: &UserId,
    embedding: &Embedding,
    clustering: &Clustering,
    ground_truth: &GroundTruth,
    eligible: &BTreeSet<UserId>,
    n_neighbors: usize,
    k: usize,
    exclude_own: bool,
) -> Result<WeightedRecommendations> {
    assert!(n_neighbors >= 1);
    let row = embedding
        .index_of(user)
        .ok_or_else(|| Error::ColdUser(user.as_str().to_string()))?;
    let point = embedding.vectors.row(row);
    let cluster = predict_cluster(clustering, point);

    let mut candidates: Vec<(&UserId, f64)> = eligible
        .iter()
        .filter(|u| *u != user)
        .filter_map(|u| embedding.index_of(u).map(|i| (u, i)))
        .filter(|&(_, i)| clustering.assignment[i] == cluster)
        .map(|(u, i)| (u, euclidean_distance(point, embedding.vectors.row(i))))
        .collect();
    candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(b.0)));
    candidates.truncate(n_neighbors);

    let mut votes: BTreeMap<&BusinessId, u32> = BTreeMap::new();
    for (neighbor, _) in &candidates {
        if let Some(set) = ground_truth.of(neighbor) {
            for item in set {
                *votes.entry(item).or_insert(0) += 1;
            }
        }
    }
    if exclude_own {
        if let Some(own) = ground_truth.of(user) {
            votes.retain(|item, _| !own.contains(*item));
        }
    }

    let mut items: Vec<(BusinessId, u32)> = votes
        .into_iter()
        .map(|(b, w)| (b.clone(), w))
        .collect();
    items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    items.truncate(k);
    Ok(WeightedRecommendations {
        user: user.clone(),
        items,
    })
}

/// Intersection of a recommendation list with a ground-truth set.
pub fn common_recommendations(
    recommended: &WeightedRecommendations,
    truth: &BTreeSet<BusinessId>,
) -> BTreeSet<BusinessId> {
    recommended
        .items
        .iter()
        .map(|(b, _)| b)
        .filter(|b| truth.contains(*b))
        .cloned()
        .collect()
}

/// JSON dump `{user_id: [[business_id, weight], ...]}` for a batch of
/// recommendations.
pub fn save_recommendations(
    recs: &BTreeMap<UserId, WeightedRecommendations>,
    path: &Path,
) -> Result<()> {
    let map: BTreeMap<&str, Vec<(&str, u32)>> = recs
        .iter()
        .map(|(u, r)| {
            (
                u.as_str(),
                r.items.iter().map(|(b, w)| (b.as_str(), *w)).collect(),
            )
        })
        .collect();
    std::fs::write(path, serde_json::to_string_pretty(&map)?)?;
    Ok(())
}

pub fn load_recommendations(path: &Path) -> Result<BTreeMap<UserId, WeightedRecommendations>> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let raw: BTreeMap<String, Vec<(String, u32)>> =
        serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok(raw
        .into_iter()
        .map(|(u, items)| {
            let user = UserId(u);
            (
                user.clone(),
                WeightedRecommendations {
                    user,
                    items: items.into_iter().map(|(b, w)| (BusinessId(b), w)).collect(),
                },
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::Method;
    use crate::numerics::matrix::DenseMatrix;
    use std::collections::BTreeMap;

    fn graph(edges: &[(&str, &str, f64)]) -> WeightedGraph {
        let mut m = BTreeMap::new();
        for &(a, b, w) in edges {
            m.insert((UserId::new(a), UserId::new(b)), w);
        }
        WeightedGraph::from_edges(&m).unwrap()
    }

    #[test]
    fn hub_of_a_star_ranks_first() {
        let g = graph(&[
            ("hub", "l1", 1.0),
            ("hub", "l2", 1.0),
            ("hub", "l3", 1.0),
            ("hub", "l4", 1.0),
            ("hub", "l5", 1.0),
        ]);
        let top = select_top_users(&g, 1);
        assert_eq!(top, vec![UserId::new("hub")]);
    }

    #[test]
    fn equal_degree_ties_break_on_id() {
        let g = graph(&[("b", "z", 0.5), ("a", "z", 0.5)]);
        let top = select_top_users(&g, 3);
        // z has degree 1.0; a and b tie at 0.5 and sort by id
        assert_eq!(
            top,
            vec![UserId::new("z"), UserId::new("a"), UserId::new("b")]
        );
    }

    #[test]
    fn weighted_triangle_degree_order() {
        // degrees: a = 0.9 + 0.5 = 1.4, b = 0.9 + 0.1 = 1.0, c = 0.6
        let g = graph(&[("a", "b", 0.9), ("a", "c", 0.5), ("b", "c", 0.1)]);
        let top = select_top_users(&g, 3);
        assert_eq!(
            top,
            vec![UserId::new("a"), UserId::new("b"), UserId::new("c")]
        );
    }

    fn truth_of(sizes: &[(&str, usize)]) -> GroundTruth {
        let mut gt = GroundTruth::default();
        for &(u, n) in sizes {
            gt.high_rated.insert(
                u.into(),
                (0..n).map(|i| BusinessId::new(format!("{u}_{i:03}"))).collect(),
            );
        }
        gt
    }

    #[test]
    fn eligibility_bounds_are_inclusive() {
        let gt = truth_of(&[("a", 3), ("b", 5), ("c", 50), ("d", 51), ("e", 0)]);
        let kept = eligible_recommenders(&gt, 5, 50);
        assert_eq!(kept, ["b".into(), "c".into()].into());
    }

    #[test]
    fn prolific_rater_is_excluded() {
        let gt = truth_of(&[("big", 120)]);
        assert!(eligible_recommenders(&gt, 5, 50).is_empty());
    }

    /// Embedding/clustering where everyone sits in one cluster and the
    /// query user is at the origin with neighbors at increasing distance.
    fn flat_setup(users: &[&str]) -> (Embedding, Clustering) {
        let n = users.len();
        let mut data = Vec::new();
        for i in 0..n {
            data.push(i as f64);
        }
        let vectors = DenseMatrix::from_vec(n, 1, data.iter().map(|x| x + 1.0).collect());
        let ids: Vec<UserId> = users.iter().map(|&u| u.into()).collect();
        let emb = Embedding::new(Method::Spectral, vectors, ids).unwrap();
        let clustering = Clustering {
            k: 1,
            centroids: DenseMatrix::from_vec(1, 1, vec![0.0]),
            assignment: vec![0; n],
            inertia: 0.0,
            inertia_trace: vec![],
        };
        (emb, clustering)
    }

    // The worked neighbor-vote example: ten neighbors; R1 high-rated by X1
    // and X5, R2 by X7 only, R3 by X1, X3, X5, X6, X8. Expected weights
    // {R1: 2, R2: 1, R3: 5} ranked R3, R1, R2.
    #[test]
    fn worked_vote_example() {
        let names: Vec<String> = (1..=10).map(|i| format!("X{i}")).collect();
        let mut users: Vec<&str> = vec!["U"];
        users.extend(names.iter().map(|s| s.as_str()));
        let (emb, clustering) = flat_setup(&users);
        let mut gt = GroundTruth::default();
        let has: &[(&str, &[&str])] = &[
            ("X1", &["R1", "R3"]),
            ("X2", &["Z1"]),
            ("X3", &["R3"]),
            ("X4", &["Z2"]),
            ("X5", &["R1", "R3"]),
            ("X6", &["R3"]),
            ("X7", &["R2"]),
            ("X8", &["R3"]),
            ("X9", &["Z3"]),
            ("X10", &["Z4"]),
        ];
        for (u, items) in has {
            gt.high_rated
                .insert((*u).into(), items.iter().map(|&b| b.into()).collect());
        }
        gt.high_rated.insert("U".into(), BTreeSet::new());
        let eligible: BTreeSet<UserId> = names.iter().map(|s| UserId::new(s.as_str())).collect();
        let rec =
            recommend_for_user(&"U".into(), &emb, &clustering, &gt, &eligible, 10, 100, true)
                .unwrap();
        let weight = |r: &str| {
            rec.items
                .iter()
                .find(|(b, _)| b.as_str() == r)
                .map(|(_, w)| *w)
        };
        assert_eq!(weight("R1"), Some(2));
        assert_eq!(weight("R2"), Some(1));
        assert_eq!(weight("R3"), Some(5));
        let order: Vec<&str> = rec.items.iter().map(|(b, _)| b.as_str()).collect();
        let pos = |r: &str| order.iter().position(|&x| x == r).unwrap();
        assert!(pos("R3") < pos("R1") && pos("R1") < pos("R2"));
    }

    #[test]
    fn single_eligible_neighbor() {
        let (emb, clustering) = flat_setup(&["U", "V"]);
        let mut gt = GroundTruth::default();
        gt.high_rated.insert("V".into(), ["a".into()].into());
        gt.high_rated.insert("U".into(), BTreeSet::new());
        let eligible: BTreeSet<UserId> = ["V".into()].into();
        let rec =
            recommend_for_user(&"U".into(), &emb, &clustering, &gt, &eligible, 10, 10, true)
                .unwrap();
        assert_eq!(rec.items, vec![("a".into(), 1)]);
    }

    #[test]
    fn own_items_are_removed_when_excluding() {
        let (emb, clustering) = flat_setup(&["U", "V", "W", "X"]);
        let mut gt = GroundTruth::default();
        for n in ["V", "W", "X"] {
            gt.high_rated
                .insert(n.into(), ["a".into(), "b".into()].into());
        }
        gt.high_rated.insert("U".into(), ["a".into()].into());
        let eligible: BTreeSet<UserId> = ["V".into(), "W".into(), "X".into()].into();
        let rec =
            recommend_for_user(&"U".into(), &emb, &clustering, &gt, &eligible, 3, 10, true)
                .unwrap();
        assert_eq!(rec.items, vec![("b".into(), 3)]);
    }

    #[test]
    fn cold_user_errors() {
        let (emb, clustering) = flat_setup(&["U", "V"]);
        let gt = GroundTruth::default();
        let eligible = BTreeSet::new();
        assert!(matches!(
            recommend_for_user(&"nobody".into(), &emb, &clustering, &gt, &eligible, 1, 5, true),
            Err(Error::ColdUser(_))
        ));
    }

    #[test]
    fn empty_candidate_set_is_a_valid_empty_list() {
        let (emb, clustering) = flat_setup(&["U"]);
        let gt = GroundTruth::default();
        let eligible = BTreeSet::new();
        let rec =
            recommend_for_user(&"U".into(), &emb, &clustering, &gt, &eligible, 5, 5, true)
                .unwrap();
        assert!(rec.items.is_empty());
    }

    #[test]
    fn common_recommendations_examples() {
        let rec = WeightedRecommendations {
            user: "u".into(),
            items: vec![("a".into(), 3), ("b".into(), 2), ("c".into(), 1)],
        };
        let disjoint: BTreeSet<BusinessId> = ["x".into()].into();
        assert!(common_recommendations(&rec, &disjoint).is_empty());
        let superset: BTreeSet<BusinessId> =
            ["a".into(), "b".into(), "c".into(), "d".into()].into();
        assert_eq!(common_recommendations(&rec, &superset).len(), 3);
        let partial: BTreeSet<BusinessId> = ["b".into(), "c".into(), "d".into()].into();
        assert_eq!(
            common_recommendations(&rec, &partial),
            ["b".into(), "c".into()].into()
        );
    }

    // With one cluster and n_neighbors = n-1, item weight equals the number
    // of eligible users who high-rated it.
    #[test]
    fn full_neighborhood_weight_equals_popularity() {
        let users: Vec<String> = (0..12).map(|i| format!("u{i:02}")).collect();
        let refs: Vec<&str> = users.iter().map(|s| s.as_str()).collect();
        let (emb, clustering) = flat_setup(&refs);
        let mut gt = GroundTruth::default();
        let mut rng = crate::numerics::rng::Rng::seeded(14);
        let items: Vec<BusinessId> = (0..6).map(|i| BusinessId::new(format!("r{i}"))).collect();
        for u in &users[1..] {
            let set: BTreeSet<BusinessId> = items
                .iter()
                .filter(|_| rng.uniform() < 0.5)
                .cloned()
                .collect();
            gt.high_rated.insert(UserId::new(u.as_str()), set);
        }
        gt.high_rated.insert(UserId::new(&users[0]), BTreeSet::new());
        let eligible: BTreeSet<UserId> =
            users[1..].iter().map(|s| UserId::new(s.as_str())).collect();
        let rec = recommend_for_user(
            &UserId::new(&users[0]),
            &emb,
            &clustering,
            &gt,
            &eligible,
            11,
            100,
            true,
        )
        .unwrap();
        for item in &items {
            let expected = eligible
                .iter()
                .filter(|u| gt.of(u).map(|s| s.contains(item)).unwrap_or(false))
                .count() as u32;
            let got = rec
                .items
                .iter()
                .find(|(b, _)| b == item)
                .map(|(_, w)| *w)
                .unwrap_or(0);
            assert_eq!(got, expected, "item {item}");
        }
        // weights bounded by the neighborhood size
        assert!(rec.items.iter().all(|&(_, w)| w >= 1 && w <= 11));
    }
}
