//! k-means over embedding rows, with k-means++ seeding, deterministic
//! Lloyd iterations, and elbow-based selection of k.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::matrix::{euclidean_distance, DenseMatrix};
use crate::numerics::rng::Rng;
use crate::types::UserId;

#[derive(Clone, Debug)]
pub struct Clustering {
    pub k: usize,
    pub centroids: DenseMatrix,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each Lloyd assignment step; non-increasing by
    /// construction.
    pub inertia_trace: Vec<f64>,
}

impl Clustering {
    /// CSV `user_id,cluster`, one row per point in id order.
    pub fn to_csv_string(&self, ids: &[UserId]) -> String {
        assert_eq!(ids.len(), self.assignment.len());
        let mut s = String::from("user_id,cluster\n");
        for (id, &c) in ids.iter().zip(&self.assignment) {
            let _ = writeln!(s, "{},{}", id.as_str(), c);
        }
        s
    }

    pub fn save_csv(&self, ids: &[UserId], path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string(ids))?;
        Ok(())
    }

    pub fn load_csv(path: &Path, centroids: DenseMatrix) -> Result<(Vec<UserId>, Clustering)> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let mut ids = Vec::new();
        let mut assignment = Vec::new();
        for (idx, line) in text.lines().enumerate().skip(1) {
            let (id, c) = line.split_once(',').ok_or_else(|| Error::MalformedLine {
                line: idx + 1,
                msg: "expected `user_id,cluster`".into(),
            })?;
            ids.push(UserId::new(id));
            assignment.push(c.trim().parse::<usize>().map_err(|e| Error::MalformedLine {
                line: idx + 1,
                msg: format!("bad cluster id: {e}"),
            })?);
        }
        let k = centroids.rows;
        Ok((
            ids,
            Clustering {
                k,
                centroids,
                assignment,
                inertia: f64::NAN,
                inertia_trace: Vec::new(),
            },
        ))
    }
}

fn nearest_centroid(centroids: &DenseMatrix, point: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for c in 0..centroids.rows {
        let d = euclidean_distance(centroids.row(c), point);
        // strict < keeps the lowest id on ties
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// Lloyd's algorithm with k-means++ initialization. Deterministic given the
/// seed; empty clusters are re-seeded from the point farthest from its
/// assigned centroid.
pub fn kmeans(points: &DenseMatrix, k: usize, max_iter: usize, seed: u64) -> Result<Clustering> {
    assert!(max_iter >= 1);
    let n = points.rows;
    let dim = points.cols;
    let distinct = {
        let mut rows: Vec<&[f64]> = (0..n).map(|i| points.row(i)).collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.dedup();
        rows.len()
    };
    if k > distinct {
        return Err(Error::KTooLarge { k, distinct });
    }

    let mut rng = Rng::seeded(seed);
    // k-means++ seeding
    let mut centroids = DenseMatrix::zeros(k, dim);
    let first = rng.below(n as u64) as usize;
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| {
            let d = euclidean_distance(points.row(i), centroids.row(0));
            d * d
        })
        .collect();
    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                acc += d;
                if target < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.below(n as u64) as usize
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for i in 0..n {
            let d = euclidean_distance(points.row(i), centroids.row(c));
            dist2[i] = dist2[i].min(d * d);
        }
    }

    let mut assignment = vec![usize::MAX; n];
    let mut inertia_trace = Vec::new();
    let mut inertia = f64::INFINITY;
    for _iter in 0..max_iter {
        // assignment step
        let mut changed = false;
        let mut new_inertia = 0.0;
        for i in 0..n {
            let (c, d) = nearest_centroid(&centroids, points.row(i));
            if assignment[i] != c {
                changed = true;
                assignment[i] = c;
            }
            new_inertia += d * d;
        }
        inertia = new_inertia;
        inertia_trace.push(new_inertia);
        if !changed && inertia_trace.len() > 1 {
            break;
        }

        // update step: mean over assigned points in index order
        let mut sums = DenseMatrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i];
            counts[c] += 1;
            let row = sums.row_mut(c);
            for (s, &x) in row.iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let row = sums.row_mut(c);
                for s in row.iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids.row_mut(c).copy_from_slice(sums.row(c));
            } else {
                // re-seed from the farthest point
                let mut far = 0;
                let mut far_d = -1.0;
                for i in 0..n {
                    let d = euclidean_distance(points.row(i), centroids.row(assignment[i]));
                    if d > far_d {
                        far_d = d;
                        far = i;
                    }
                }
                centroids.row_mut(c).copy_from_slice(points.row(far));
            }
        }
    }

    // final assignment for consistency with the returned centroids
    let mut final_inertia = 0.0;
    for i in 0..n {
        let (c, d) = nearest_centroid(&centroids, points.row(i));
        assignment[i] = c;
        final_inertia += d * d;
    }
    if final_inertia <= inertia {
        inertia = final_inertia;
        inertia_trace.push(final_inertia);
    }

    Ok(Clustering {
        k,
        centroids,
        assignment,
        inertia,
        inertia_trace,
    })
}

/// Elbow selection: runs k-means for each candidate and picks the k with the
/// largest second difference of inertia, inertia(k-1) - 2 inertia(k) +
/// inertia(k+1). The scan extends one step below k_min so that k_min itself
/// is a candidate; ties break toward smaller k.
pub fn elbow_select_k(
    points: &DenseMatrix,
    k_min: usize,
    k_max: usize,
    max_iter: usize,
    seed: u64,
) -> Result<usize> {
    assert!(k_min >= 2 && k_max > k_min, "need 2 <= k_min < k_max");
    let lo = k_min - 1;
    let mut inertia = std::collections::BTreeMap::new();
    for k in lo..=k_max {
        let c = kmeans(points, k, max_iter, Rng::substream(seed, k as u64).next_u64())?;
        inertia.insert(k, c.inertia);
    }
    let mut best_k = k_min;
    let mut best_curve = f64::NEG_INFINITY;
    for k in k_min..k_max {
        let curve = inertia[&(k - 1)] - 2.0 * inertia[&k] + inertia[&(k + 1)];
        if curve > best_curve {
            best_curve = curve;
            best_k = k;
        }
    }
    Ok(best_k)
}

/// Nearest centroid by Euclidean distance; ties go to the lowest id.
pub fn predict_cluster(clustering: &Clustering, point: &[f64]) -> usize {
    assert_eq!(point.len(), clustering.centroids.cols);
    nearest_centroid(&clustering.centroids, point).0
}
