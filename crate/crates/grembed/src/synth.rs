//! Planted-community dataset generator in the ingest JSON-lines layout.
//! Stands in for a real review dump: users like their own community's
//! restaurants, dislike the occasional outside one, and befriend mostly
//! within their community.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rng::Rng;
use crate::types::UserId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub communities: usize,
    pub users_per_community: usize,
    pub restaurants_per_community: usize,
    /// probability a user 5-stars a restaurant of their own community
    pub intra_like: f64,
    /// probability a user 1-stars a restaurant of another community
    pub cross_like: f64,
    pub friend_intra: f64,
    pub friend_inter: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            communities: 3,
            users_per_community: 100,
            // 50 per community keeps liked-set sizes (~0.6 * 50) inside the
            // default recommender eligibility band of [5, 50]
            restaurants_per_community: 50,
            intra_like: 0.6,
            cross_like: 0.02,
            friend_intra: 0.15,
            friend_inter: 0.005,
            seed: 11,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let mut violations = Vec::new();
        if self.communities == 0 || self.users_per_community == 0 {
            violations.push("communities and users_per_community must be positive".into());
        }
        if self.restaurants_per_community == 0 {
            violations.push("restaurants_per_community must be positive".into());
        }
        for (name, p) in [
            ("intra_like", self.intra_like),
            ("cross_like", self.cross_like),
            ("friend_intra", self.friend_intra),
            ("friend_inter", self.friend_inter),
        ] {
            if !(0.0..=1.0).contains(&p) {
                violations.push(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.intra_like <= self.cross_like {
            violations.push("intra_like must exceed cross_like for planted structure".into());
        }
        if self.friend_intra <= self.friend_inter {
            violations.push("friend_intra must exceed friend_inter".into());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(violations))
        }
    }

    pub fn user_name(community: usize, index: usize) -> String {
        format!("c{community}_u{index:03}")
    }

    pub fn restaurant_name(community: usize, index: usize) -> String {
        format!("c{community}_r{index:03}")
    }
}

/// Generated dataset, in memory: JSON-lines bodies plus the community
/// label of every user for oracle checks.
#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub reviews_jsonl: String,
    pub friends_jsonl: String,
    pub labels: BTreeMap<UserId, usize>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut labels = BTreeMap::new();
    let users: Vec<(usize, String)> = (0..spec.communities)
        .flat_map(|c| {
            (0..spec.users_per_community).map(move |i| (c, SyntheticSpec::user_name(c, i)))
        })
        .collect();
    for (c, name) in &users {
        labels.insert(UserId::new(name.as_str()), *c);
    }

    let mut review_rng = Rng::substream(spec.seed, 0x7e71);
    let mut reviews = String::new();
    for (uc, name) in &users {
        for rc in 0..spec.communities {
            for ri in 0..spec.restaurants_per_community {
                let (p, stars) = if rc == *uc {
                    (spec.intra_like, 5)
                } else {
                    (spec.cross_like, 1)
                };
                if review_rng.uniform() < p {
                    writeln!(
                        reviews,
                        r#"{{"user_id":"{name}","business_id":"{}","stars":{stars}}}"#,
                        SyntheticSpec::restaurant_name(rc, ri)
                    )
                    .unwrap();
                }
            }
        }
    }

    let mut friend_rng = Rng::substream(spec.seed, 0xf21e);
    let mut adjacency: BTreeMap<&str, Vec<&str>> =
        users.iter().map(|(_, n)| (n.as_str(), Vec::new())).collect();
    for i in 0..users.len() {
        for j in (i + 1)..users.len() {
            let p = if users[i].0 == users[j].0 {
                spec.friend_intra
            } else {
                spec.friend_inter
            };
            if friend_rng.uniform() < p {
                adjacency.get_mut(users[i].1.as_str()).unwrap().push(&users[j].1);
                adjacency.get_mut(users[j].1.as_str()).unwrap().push(&users[i].1);
            }
        }
    }
    let mut friends = String::new();
    for (name, list) in &adjacency {
        let quoted: Vec<String> = list.iter().map(|f| format!("\"{f}\"")).collect();
        writeln!(
            friends,
            r#"{{"user_id":"{name}","friends":[{}]}}"#,
            quoted.join(",")
        )
        .unwrap();
    }

    Ok(SyntheticDataset {
        reviews_jsonl: reviews,
        friends_jsonl: friends,
        labels,
    })
}

/// Writes reviews.jsonl, friends.jsonl, and labels.json into `dir`.
pub fn write_synthetic(spec: &SyntheticSpec, dir: &Path) -> Result<SyntheticDataset> {
    let data = generate_synthetic(spec)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("reviews.jsonl"), &data.reviews_jsonl)?;
    std::fs::write(dir.join("friends.jsonl"), &data.friends_jsonl)?;
    let labels: BTreeMap<&str, usize> = data
        .labels
        .iter()
        .map(|(u, &c)| (u.as_str(), c))
        .collect();
    std::fs::write(
        dir.join("labels.json"),
        serde_json::to_string_pretty(&labels)?,
    )?;
    Ok(data)
}
