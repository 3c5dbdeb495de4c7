//! Fusion of the three per-embedding recommenders. Each cohort user gets a
//! 3×R indicator block (did embedding e recommend restaurant r), the target
//! is the user's ground-truth indicator row, and a small rectified network
//! (plus a 3-weight linear blend as a cheap alternative) learns to merge
//! the three opinions.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::adam::{adam_step, AdamState};
use crate::numerics::matrix::{format_f64, DenseMatrix};
use crate::numerics::rng::Rng;
use crate::recommend::{GroundTruth, WeightedRecommendations};
use crate::types::{BusinessId, UserId};

/// Indicator ordering of the embedding axis.
pub const EMBEDDING_ORDER: [&str; 3] = ["hope", "spectral", "node2vec"];

/// Supervised fusion dataset. `x` holds one row per user: the 3×R block
/// flattened row-major (hope indicators, then spectral, then node2vec).
/// `y` is the n×R ground-truth indicator matrix over the same restaurant
/// ordering.
#[derive(Clone, Debug)]
pub struct HybridDataset {
    pub users: Vec<UserId>,
    pub restaurants: Vec<BusinessId>,
    pub x: DenseMatrix,
    pub y: DenseMatrix,
}

impl HybridDataset {
    pub fn n(&self) -> usize {
        self.users.len()
    }

    pub fn n_restaurants(&self) -> usize {
        self.restaurants.len()
    }
}

/// Builds the indicator dataset over the sorted union of cohort ground
/// truths. With `binarize` off, X carries the neighbor-vote weights
/// instead of 0/1 presence flags.
pub fn build_hybrid_dataset(
    cohort: &[UserId],
    per_embedding_recs: [&BTreeMap<UserId, WeightedRecommendations>; 3],
    ground_truth: &GroundTruth,
    binarize: bool,
) -> Result<HybridDataset> {
    let mut universe: Vec<BusinessId> = Vec::new();
    for user in cohort {
        let truth = ground_truth
            .of(user)
            .ok_or_else(|| Error::ZeroRated(user.as_str().to_string()))?;
        if truth.is_empty() {
            return Err(Error::ZeroRated(user.as_str().to_string()));
        }
        universe.extend(truth.iter().cloned());
    }
    universe.sort();
    universe.dedup();
    let index_of: BTreeMap<&BusinessId, usize> =
        universe.iter().enumerate().map(|(i, b)| (b, i)).collect();

    let n = cohort.len();
    let r = universe.len();
    let mut x = DenseMatrix::zeros(n, 3 * r);
    let mut y = DenseMatrix::zeros(n, r);
    for (i, user) in cohort.iter().enumerate() {
        for (e, recs) in per_embedding_recs.iter().enumerate() {
            let rec = recs.get(user).ok_or_else(|| Error::MissingRecommendation {
                user: user.as_str().to_string(),
                method: EMBEDDING_ORDER[e].to_string(),
            })?;
            for (item, weight) in &rec.items {
                if let Some(&j) = index_of.get(item) {
                    x[(i, e * r + j)] = if binarize { 1.0 } else { f64::from(*weight) };
                }
            }
        }
        for item in ground_truth.of(user).unwrap() {
            y[(i, index_of[item])] = 1.0;
        }
    }
    Ok(HybridDataset {
        users: cohort.to_vec(),
        restaurants: universe,
        x,
        y,
    })
}

/// Feed-forward network with rectified activations on every layer,
/// including the output.
#[derive(Clone, Debug)]
pub struct MLPModel {
    pub layer_sizes: Vec<usize>,
    /// weights[l] has shape (layer_sizes[l+1], layer_sizes[l])
    pub weights: Vec<DenseMatrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MLPModel {
    /// Fan-balanced uniform weights in ±sqrt(6/(fan_in+fan_out)), zero
    /// biases.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Self {
        assert!(layer_sizes.len() >= 2);
        let mut rng = Rng::seeded(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut m = DenseMatrix::zeros(fan_out, fan_in);
            for v in m.data_mut().iter_mut() {
                *v = rng.uniform_in(-bound, bound);
            }
            weights.push(m);
            biases.push(vec![0.0; fan_out]);
        }
        MLPModel {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        }
    }

    /// The paper-shaped architecture for a restaurant universe of size R.
    pub fn for_universe(r: usize, seed: u64) -> Self {
        MLPModel::new(&[3 * r, 32, 64, 128, r], seed)
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// JSON manifest plus one CSV per weight matrix and bias vector.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let manifest = serde_json::json!({ "layer_sizes": self.layer_sizes });
        std::fs::write(dir.join("mlp.json"), serde_json::to_string_pretty(&manifest)?)?;
        for (l, w) in self.weights.iter().enumerate() {
            w.save_csv(&dir.join(format!("w{l}.csv")))?;
            let bias = DenseMatrix::from_vec(1, self.biases[l].len(), self.biases[l].clone());
            bias.save_csv(&dir.join(format!("b{l}.csv")))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join("mlp.json");
        if !manifest_path.exists() {
            return Err(Error::MissingArtifact(manifest_path));
        }
        #[derive(Deserialize)]
        struct Manifest {
            layer_sizes: Vec<usize>,
        }
        let manifest: Manifest =
            serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..manifest.layer_sizes.len() - 1 {
            weights.push(DenseMatrix::load_csv(&dir.join(format!("w{l}.csv")))?);
            biases.push(DenseMatrix::load_csv(&dir.join(format!("b{l}.csv")))?.data().to_vec());
        }
        Ok(MLPModel {
            layer_sizes: manifest.layer_sizes,
            weights,
            biases,
        })
    }
}

fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Pre-activations and activations for every layer; activations[0] is the
/// input.
fn forward_trace(model: &MLPModel, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    assert_eq!(x.len(), model.layer_sizes[0]);
    let mut activations = vec![x.to_vec()];
    let mut pre = Vec::new();
    for l in 0..model.n_layers() {
        let mut z = model.weights[l].matvec(activations.last().unwrap());
        for (zi, b) in z.iter_mut().zip(&model.biases[l]) {
            *zi += b;
        }
        activations.push(z.iter().map(|&v| relu(v)).collect());
        pre.push(z);
    }
    (pre, activations)
}

/// Forward pass through all rectified layers.
pub fn mlp_forward(model: &MLPModel, x: &[f64]) -> Vec<f64> {
    forward_trace(model, x).1.pop().unwrap()
}

/// MSE over the given rows plus analytic gradients for every weight and
/// bias, via reverse-mode accumulation. The loss denominator is
/// rows × output-dim, matching a mean over users and restaurants.
pub fn mlp_loss_and_grads(
    model: &MLPModel,
    x: &DenseMatrix,
    y: &DenseMatrix,
    row_subset: &[usize],
) -> (f64, Vec<DenseMatrix>, Vec<Vec<f64>>) {
    assert!(!row_subset.is_empty());
    let n_layers = model.n_layers();
    let out_dim = *model.layer_sizes.last().unwrap();
    let denom = (row_subset.len() * out_dim) as f64;
    let mut grad_w: Vec<DenseMatrix> = model
        .weights
        .iter()
        .map(|w| DenseMatrix::zeros(w.rows, w.cols))
        .collect();
    let mut grad_b: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();
    let mut loss = 0.0;
    for &i in row_subset {
        let (pre, acts) = forward_trace(model, x.row(i));
        let yhat = &acts[n_layers];
        let mut delta: Vec<f64> = yhat
            .iter()
            .zip(y.row(i))
            .zip(&pre[n_layers - 1])
            .map(|((&p, &t), &z)| {
                loss += (p - t) * (p - t) / denom;
                if z > 0.0 {
                    2.0 * (p - t) / denom
                } else {
                    0.0
                }
            })
            .collect();
        for l in (0..n_layers).rev() {
            for (r, &d) in delta.iter().enumerate() {
                grad_b[l][r] += d;
                let row = grad_w[l].row_mut(r);
                for (c, &a) in acts[l].iter().enumerate() {
                    row[c] += d * a;
                }
            }
            if l > 0 {
                let mut next = vec![0.0; model.layer_sizes[l]];
                for (r, &d) in delta.iter().enumerate() {
                    let wrow = model.weights[l].row(r);
                    for (c, nv) in next.iter_mut().enumerate() {
                        *nv += d * wrow[c];
                    }
                }
                for (nv, &z) in next.iter_mut().zip(&pre[l - 1]) {
                    if z <= 0.0 {
                        *nv = 0.0;
                    }
                }
                delta = next;
            }
        }
    }
    (loss, grad_w, grad_b)
}

/// A trained fusion model with its seeded train/test split and per-epoch
/// (train, test) loss trace.
#[derive(Clone, Debug)]
pub struct TrainedMlp {
    pub model: MLPModel,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub loss_trace: Vec<(f64, f64)>,
}

fn mse_only(model: &MLPModel, x: &DenseMatrix, y: &DenseMatrix, rows: &[usize]) -> f64 {
    let out_dim = *model.layer_sizes.last().unwrap();
    let denom = (rows.len() * out_dim) as f64;
    rows.iter()
        .map(|&i| {
            mlp_forward(model, x.row(i))
                .iter()
                .zip(y.row(i))
                .map(|(&p, &t)| (p - t) * (p - t))
                .sum::<f64>()
        })
        .sum::<f64>()
        / denom
}

/// Full-batch Adam on MSE after a seeded shuffle/split of the users.
pub fn train_mlp(
    dataset: &HybridDataset,
    split_ratio: f64,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<TrainedMlp> {
    assert!(split_ratio > 0.0 && split_ratio < 1.0);
    assert!(dataset.n() >= 2, "need at least one train and one test user");
    let mut rows: Vec<usize> = (0..dataset.n()).collect();
    let mut rng = Rng::substream(seed, 0x511_7);
    rng.shuffle(&mut rows);
    let n_train = ((dataset.n() as f64) * split_ratio).round() as usize;
    let n_train = n_train.clamp(1, dataset.n() - 1);
    let (train_rows, test_rows) = rows.split_at(n_train);

    let mut model = MLPModel::for_universe(dataset.n_restaurants(), seed);
    let mut states: Vec<(AdamState, AdamState)> = model
        .weights
        .iter()
        .zip(&model.biases)
        .map(|(w, b)| (AdamState::new(w.data().len(), lr), AdamState::new(b.len(), lr)))
        .collect();
    let mut trace = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (train_loss, grad_w, grad_b) =
            mlp_loss_and_grads(&model, &dataset.x, &dataset.y, train_rows);
        if !train_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        for (l, (sw, sb)) in states.iter_mut().enumerate() {
            adam_step(model.weights[l].data_mut(), grad_w[l].data(), sw);
            adam_step(&mut model.biases[l], &grad_b[l], sb);
        }
        let test_loss = mse_only(&model, &dataset.x, &dataset.y, test_rows);
        trace.push((train_loss, test_loss));
    }
    Ok(TrainedMlp {
        model,
        train_rows: train_rows.to_vec(),
        test_rows: test_rows.to_vec(),
        loss_trace: trace,
    })
}

/// Top-k restaurants by network score, descending; equal scores break
/// toward the lexicographically smaller id.
pub fn predict_hybrid(
    model: &MLPModel,
    x_row: &[f64],
    restaurants: &[BusinessId],
    k: usize,
) -> Vec<BusinessId> {
    assert!(k <= restaurants.len());
    let scores = mlp_forward(model, x_row);
    assert_eq!(scores.len(), restaurants.len());
    debug_assert!(scores.iter().all(|&s| s >= 0.0));
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    order.truncate(k);
    order.into_iter().map(|i| restaurants[i].clone()).collect()
}

/// Loss and gradient of the 3-weight linear blend
/// score(i,r) = sum_e alpha_e X[i][e][r] against Y under MSE.
pub fn blend_loss_and_grad(dataset: &HybridDataset, alpha: &[f64; 3]) -> (f64, [f64; 3]) {
    let r = dataset.n_restaurants();
    let denom = (dataset.n() * r) as f64;
    let mut loss = 0.0;
    let mut grad = [0.0; 3];
    for i in 0..dataset.n() {
        let xi = dataset.x.row(i);
        let yi = dataset.y.row(i);
        for j in 0..r {
            let score: f64 = (0..3).map(|e| alpha[e] * xi[e * r + j]).sum();
            let err = score - yi[j];
            loss += err * err / denom;
            for e in 0..3 {
                grad[e] += 2.0 * err * xi[e * r + j] / denom;
            }
        }
    }
    (loss, grad)
}

/// Plain gradient descent on the three blend weights, zero-initialized.
pub fn fit_linear_blend(dataset: &HybridDataset, epochs: usize, lr: f64) -> [f64; 3] {
    let mut alpha = [0.0; 3];
    for _ in 0..epochs {
        let (_, grad) = blend_loss_and_grad(dataset, &alpha);
        for e in 0..3 {
            alpha[e] -= lr * grad[e];
        }
    }
    alpha
}

/// Persisted training summary for the manifest and evaluation stage.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HybridSummary {
    pub restaurants: Vec<BusinessId>,
    pub users: Vec<UserId>,
    pub train_users: Vec<UserId>,
    pub test_users: Vec<UserId>,
    pub blend_weights: [f64; 3],
    pub final_train_loss: f64,
    pub final_test_loss: f64,
}

pub fn save_loss_trace(trace: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,train_mse,test_mse\n");
    for (i, (tr, te)) in trace.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, format_f64(*tr), format_f64(*te)));
    }
    std::fs::write(path, out)?;
    Ok(())
}
