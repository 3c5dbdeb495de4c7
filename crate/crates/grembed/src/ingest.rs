//! Dataset ingestion: JSON-lines reviews and friend lists in the Yelp Open
//! Dataset field layout, activity filtering, and the liked/disliked rating
//! table that feeds the similarity weight.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::types::{BusinessId, UserId};

/// One deduplicated review.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Review {
    pub user: UserId,
    pub business: BusinessId,
    pub stars: u8,
}

/// Undirected friendship pairs, each stored once with endpoints ordered.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FriendshipList {
    pairs: BTreeSet<(UserId, UserId)>,
}

impl FriendshipList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an unordered pair; self-pairs are ignored.
    pub fn insert(&mut self, a: UserId, b: UserId) {
        if a == b {
            return;
        }
        let pair = if a < b { (a, b) } else { (b, a) };
        self.pairs.insert(pair);
    }

    pub fn contains(&self, a: &UserId, b: &UserId) -> bool {
        let pair = if a < b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.pairs.contains(&pair)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(UserId, UserId)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Per-user liked (stars >= high) and disliked (stars <= low) item sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatingsTable {
    pub liked: BTreeMap<UserId, BTreeSet<BusinessId>>,
    pub disliked: BTreeMap<UserId, BTreeSet<BusinessId>>,
    pub high_threshold: u8,
    pub low_threshold: u8,
}

impl RatingsTable {
    pub fn liked_of(&self, u: &UserId) -> BTreeSet<BusinessId> {
        self.liked.get(u).cloned().unwrap_or_default()
    }

    pub fn disliked_of(&self, u: &UserId) -> BTreeSet<BusinessId> {
        self.disliked.get(u).cloned().unwrap_or_default()
    }

    pub fn users(&self) -> impl Iterator<Item = &UserId> {
        self.liked.keys()
    }

    /// Serializes as `{user: {liked: [...], disliked: [...]}}`.
    pub fn to_json_string(&self) -> String {
        let mut map: BTreeMap<&UserId, serde_json::Value> = BTreeMap::new();
        for user in self.liked.keys() {
            let liked: Vec<&str> = self.liked[user].iter().map(|b| b.as_str()).collect();
            let disliked: Vec<&str> = self
                .disliked
                .get(user)
                .map(|s| s.iter().map(|b| b.as_str()).collect())
                .unwrap_or_default();
            map.insert(
                user,
                serde_json::json!({ "liked": liked, "disliked": disliked }),
            );
        }
        serde_json::to_string_pretty(&map).expect("ratings table serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    /// Thresholds are not part of the file format; they travel in the run
    /// configuration.
    pub fn load(path: &Path, high_threshold: u8, low_threshold: u8) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        #[derive(Deserialize)]
        struct Entry {
            liked: Vec<String>,
            disliked: Vec<String>,
        }
        let raw: BTreeMap<String, Entry> =
            serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let mut liked = BTreeMap::new();
        let mut disliked = BTreeMap::new();
        for (user, entry) in raw {
            let uid = UserId(user);
            liked.insert(
                uid.clone(),
                entry.liked.into_iter().map(BusinessId).collect(),
            );
            disliked.insert(uid, entry.disliked.into_iter().map(BusinessId).collect());
        }
        Ok(RatingsTable {
            liked,
            disliked,
            high_threshold,
            low_threshold,
        })
    }
}

#[derive(Deserialize)]
struct ReviewRecord {
    user_id: Option<String>,
    business_id: Option<String>,
    stars: Option<f64>,
}

#[derive(Deserialize)]
struct FriendRecord {
    user_id: Option<String>,
    friends: Option<Vec<String>>,
}

/// Parses JSON-lines review and friendship files. Duplicate (user, business)
/// reviews keep the highest star rating; friendships are symmetrized and
/// deduplicated. Unknown fields are ignored.
pub fn parse_dataset(review_path: &Path, friends_path: &Path) -> Result<(Vec<Review>, FriendshipList)> {
    for p in [review_path, friends_path] {
        if !p.exists() {
            return Err(Error::MissingArtifact(p.to_path_buf()));
        }
    }

    let review_text = std::fs::read_to_string(review_path)?;
    let mut best: BTreeMap<(UserId, BusinessId), u8> = BTreeMap::new();
    let mut any_review = false;
    for (idx, line) in review_text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        any_review = true;
        let rec: ReviewRecord =
            serde_json::from_str(line).map_err(|e| Error::MalformedLine {
                line: line_no,
                msg: e.to_string(),
            })?;
        let user = rec.user_id.ok_or_else(|| Error::MissingField {
            line: line_no,
            field: "user_id".into(),
        })?;
        let business = rec.business_id.ok_or_else(|| Error::MissingField {
            line: line_no,
            field: "business_id".into(),
        })?;
        let stars_raw = rec.stars.ok_or_else(|| Error::MissingField {
            line: line_no,
            field: "stars".into(),
        })?;
        if stars_raw.fract() != 0.0 || !(1.0..=5.0).contains(&stars_raw) {
            return Err(Error::MalformedLine {
                line: line_no,
                msg: format!("stars must be an integer in 1..5, got {stars_raw}"),
            });
        }
        let stars = stars_raw as u8;
        let key = (UserId(user), BusinessId(business));
        let entry = best.entry(key).or_insert(0);
        if stars > *entry {
            *entry = stars;
        }
    }
    if !any_review {
        return Err(Error::EmptyInput(review_path.to_path_buf()));
    }

    let friends_text = std::fs::read_to_string(friends_path)?;
    let mut friendships = FriendshipList::new();
    let mut any_friend_record = false;
    for (idx, line) in friends_text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        any_friend_record = true;
        let rec: FriendRecord = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
            line: line_no,
            msg: e.to_string(),
        })?;
        let user = rec.user_id.ok_or_else(|| Error::MissingField {
            line: line_no,
            field: "user_id".into(),
        })?;
        let friends = rec.friends.ok_or_else(|| Error::MissingField {
            line: line_no,
            field: "friends".into(),
        })?;
        let uid = UserId(user);
        for friend in friends {
            friendships.insert(uid.clone(), UserId(friend));
        }
    }
    if !any_friend_record {
        return Err(Error::EmptyInput(friends_path.to_path_buf()));
    }

    let reviews = best
        .into_iter()
        .map(|((user, business), stars)| Review {
            user,
            business,
            stars,
        })
        .collect();
    Ok((reviews, friendships))
}

/// Users with at least `min_reviews` deduplicated reviews and at least one
/// friendship edge whose other endpoint also meets the review threshold.
pub fn filter_active_users(
    reviews: &[Review],
    friendships: &FriendshipList,
    min_reviews: usize,
) -> Result<BTreeSet<UserId>> {
    assert!(min_reviews >= 1, "min_reviews must be >= 1");
    let mut counts: BTreeMap<&UserId, usize> = BTreeMap::new();
    for r in reviews {
        *counts.entry(&r.user).or_insert(0) += 1;
    }
    let reviewers: BTreeSet<&UserId> = counts
        .iter()
        .filter(|(_, &c)| c >= min_reviews)
        .map(|(&u, _)| u)
        .collect();
    let mut active = BTreeSet::new();
    for (a, b) in friendships.iter() {
        if reviewers.contains(a) && reviewers.contains(b) {
            active.insert(a.clone());
            active.insert(b.clone());
        }
    }
    if active.is_empty() {
        return Err(Error::NoActiveUsers);
    }
    Ok(active)
}

/// Splits each user's reviews into liked (stars >= high) and disliked
/// (stars <= low); the mid band lands in neither set.
pub fn build_ratings_table(
    reviews: &[Review],
    users: &BTreeSet<UserId>,
    high_threshold: u8,
    low_threshold: u8,
) -> RatingsTable {
    assert!(
        low_threshold < high_threshold,
        "low threshold must sit below high threshold"
    );
    let mut liked: BTreeMap<UserId, BTreeSet<BusinessId>> = BTreeMap::new();
    let mut disliked: BTreeMap<UserId, BTreeSet<BusinessId>> = BTreeMap::new();
    for u in users {
        liked.insert(u.clone(), BTreeSet::new());
        disliked.insert(u.clone(), BTreeSet::new());
    }
    for r in reviews {
        if !users.contains(&r.user) {
            continue;
        }
        if r.stars >= high_threshold {
            liked.get_mut(&r.user).unwrap().insert(r.business.clone());
        } else if r.stars <= low_threshold {
            disliked.get_mut(&r.user).unwrap().insert(r.business.clone());
        }
    }
    RatingsTable {
        liked,
        disliked,
        high_threshold,
        low_threshold,
    }
}
