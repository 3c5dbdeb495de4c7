//! Recommendation quality metrics: MAE (miss rate of the recommended list)
//! and Coverage (fraction of each user's high-rated set that the list hits,
//! as a percent).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recommend::{GroundTruth, WeightedRecommendations};
use crate::types::UserId;

/// Per-user counts behind the aggregate metrics: list length after
/// truncation (`n_r`), hits against the truth set (`n_hit`), truth set
/// size (`n_u`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserCounts {
    pub n_r: usize,
    pub n_hit: usize,
    pub n_u: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub k: usize,
    pub coverage_percent: f64,
    pub mae: f64,
    pub per_user: BTreeMap<UserId, UserCounts>,
    /// Users dropped because their recommendation list was empty (the MAE
    /// formula is undefined at N_r = 0).
    pub excluded_users: usize,
}

/// Mean of |N_r - N_hit| / N_r. Callers must exclude N_r = 0 users first.
pub fn mae(per_user: &[(usize, usize)]) -> Result<f64> {
    let mut sum = 0.0;
    for &(n_r, n_hit) in per_user {
        if n_r == 0 {
            return Err(Error::ZeroRecommendation(
                "mae is undefined at N_r = 0".into(),
            ));
        }
        debug_assert!(n_hit <= n_r);
        sum += (n_r as f64 - n_hit as f64).abs() / n_r as f64;
    }
    Ok(sum / per_user.len().max(1) as f64)
}

/// Mean of N_hit / N_u as a percent. Callers must exclude N_u = 0 users.
pub fn coverage(per_user: &[(usize, usize)]) -> Result<f64> {
    let mut sum = 0.0;
    for &(n_hit, n_u) in per_user {
        if n_u == 0 {
            return Err(Error::ZeroRated(
                "coverage is undefined at N_u = 0".into(),
            ));
        }
        debug_assert!(n_hit <= n_u);
        sum += n_hit as f64 / n_u as f64;
    }
    Ok(100.0 * sum / per_user.len().max(1) as f64)
}

/// Scores one method's recommendations against ground truth at list
/// length k. Every scored user must have a non-empty truth set; users with
/// empty recommendation lists are excluded and counted.
pub fn evaluate_method(
    method: &str,
    recs: &BTreeMap<UserId, WeightedRecommendations>,
    truth: &GroundTruth,
    k: usize,
) -> Result<EvalReport> {
    assert!(k >= 1);
    let mut per_user = BTreeMap::new();
    let mut excluded = 0usize;
    for (user, rec) in recs {
        let truth_set = truth
            .of(user)
            .ok_or_else(|| Error::ZeroRated(user.as_str().to_string()))?;
        if truth_set.is_empty() {
            return Err(Error::ZeroRated(user.as_str().to_string()));
        }
        let n_r = k.min(rec.items.len());
        if n_r == 0 {
            excluded += 1;
            continue;
        }
        let n_hit = rec.items[..n_r]
            .iter()
            .filter(|(b, _)| truth_set.contains(b))
            .count();
        per_user.insert(
            user.clone(),
            UserCounts {
                n_r,
                n_hit,
                n_u: truth_set.len(),
            },
        );
    }
    let mae_rows: Vec<(usize, usize)> = per_user.values().map(|c| (c.n_r, c.n_hit)).collect();
    let cov_rows: Vec<(usize, usize)> = per_user.values().map(|c| (c.n_hit, c.n_u)).collect();
    Ok(EvalReport {
        method: method.to_string(),
        k,
        coverage_percent: coverage(&cov_rows)?,
        mae: mae(&mae_rows)?,
        per_user,
        excluded_users: excluded,
    })
}

/// Scores the same recommendations at several list lengths, asserting that
/// hit counts never decrease as k grows.
pub fn sweep_recommendation_count(
    method: &str,
    recs: &BTreeMap<UserId, WeightedRecommendations>,
    truth: &GroundTruth,
    k_values: &[usize],
) -> Result<Vec<EvalReport>> {
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    let mut reports = Vec::with_capacity(ks.len());
    for &k in &ks {
        let report = evaluate_method(method, recs, truth, k)?;
        if let Some(prev) = reports.last() {
            let prev: &EvalReport = prev;
            for (user, counts) in &report.per_user {
                if let Some(before) = prev.per_user.get(user) {
                    assert!(
                        counts.n_hit >= before.n_hit,
                        "hit count dropped for {user} between k={} and k={k}",
                        prev.k
                    );
                }
            }
        }
        reports.push(report);
    }
    Ok(reports)
}

/// Sweep curves as `method,k,coverage_percent,mae` rows.
pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("method,k,coverage_percent,mae\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.method,
            r.k,
            crate::numerics::matrix::format_f64(r.coverage_percent),
            crate::numerics::matrix::format_f64(r.mae)
        ));
    }
    out
}

pub fn save_reports_json(reports: &[EvalReport], path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(reports)?)?;
    Ok(())
}
