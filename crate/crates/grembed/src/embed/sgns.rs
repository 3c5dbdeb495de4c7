//! Skip-gram with negative sampling over walk corpora.
//!
//! For a center node c and a context node o inside the window, training
//! maximizes log sigma(u_c . v_o) + sum_neg log sigma(-u_c . v_neg), with
//! negatives drawn from the unigram distribution raised to 0.75. The center
//! vector table is the embedding.

use crate::numerics::matrix::{dot, DenseMatrix};
use crate::numerics::rng::Rng;

use super::walks::WalkCorpus;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Loss of a single positive pair: -log sigma(u . v).
pub fn positive_pair_loss(u: &[f64], v: &[f64]) -> f64 {
    -sigmoid(dot(u, v)).ln()
}

/// Gradient of the positive-pair loss w.r.t. u is (sigma(u.v) - 1) v, and
/// symmetrically for v.
pub fn positive_pair_grad(u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = sigmoid(dot(u, v)) - 1.0;
    (
        v.iter().map(|x| s * x).collect(),
        u.iter().map(|x| s * x).collect(),
    )
}

/// Loss of a single negative pair: -log sigma(-u . v).
pub fn negative_pair_loss(u: &[f64], v: &[f64]) -> f64 {
    -sigmoid(-dot(u, v)).ln()
}

/// Trains SGNS over the corpus; returns the center-vector matrix
/// (n_nodes x d) and the mean per-pair loss of each epoch, measured before
/// that pair's update.
#[allow(clippy::too_many_arguments)]
pub fn train_sgns(
    corpus: &WalkCorpus,
    n_nodes: usize,
    d: usize,
    window: usize,
    negatives: usize,
    epochs: usize,
    lr: f64,
    seed: u64,
) -> (DenseMatrix, Vec<f64>) {
    assert!(d >= 1, "embedding dimension must be >= 1");
    assert!(!corpus.walks.is_empty(), "corpus must be non-empty");

    let mut rng = Rng::seeded(seed);

    // seeded init: centers uniform in +-0.5/d, contexts zero (word2vec style)
    let mut centers = DenseMatrix::zeros(n_nodes, d);
    for i in 0..n_nodes {
        for j in 0..d {
            centers[(i, j)] = (rng.uniform() - 0.5) / d as f64;
        }
    }
    let mut contexts = DenseMatrix::zeros(n_nodes, d);

    // unigram^0.75 sampling table (cumulative, binary-searched)
    let mut counts = vec![0f64; n_nodes];
    let mut total_positions = 0usize;
    for walk in &corpus.walks {
        total_positions += walk.len();
        for &node in walk {
            counts[node] += 1.0;
        }
    }
    let mut cumulative = Vec::with_capacity(n_nodes);
    let mut acc = 0.0;
    for c in &counts {
        acc += c.powf(0.75);
        cumulative.push(acc);
    }
    let table_total = acc;

    // rough count of positive pairs per epoch, for linear lr decay
    let pairs_per_epoch = (total_positions * 2 * window).max(1);
    let total_pairs = (pairs_per_epoch * epochs.max(1)) as f64;
    let mut processed = 0f64;
    let min_lr = lr * 1e-4;

    let mut epoch_losses = Vec::with_capacity(epochs);
    let mut grad_u = vec![0.0; d];

    for _epoch in 0..epochs {
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for walk in &corpus.walks {
            for (i, &center) in walk.iter().enumerate() {
                let lo = i.saturating_sub(window);
                let hi = (i + window + 1).min(walk.len());
                for j in lo..hi {
                    if j == i {
                        continue;
                    }
                    let context = walk[j];
                    let step = (lr * (1.0 - processed / total_pairs)).max(min_lr);
                    processed += 1.0;

                    let u = centers.row(center).to_vec();
                    grad_u.iter_mut().for_each(|g| *g = 0.0);
                    let mut pair_loss = 0.0;

                    // positive
                    {
                        let v = contexts.row_mut(context);
                        let s = sigmoid(dot(&u, v));
                        pair_loss -= s.ln();
                        let coef = s - 1.0;
                        for k in 0..d {
                            grad_u[k] += coef * v[k];
                            v[k] -= step * coef * u[k];
                        }
                    }
                    // negatives from unigram^0.75; a draw equal to the
                    // positive context is skipped, as in word2vec
                    for _ in 0..negatives {
                        let target = rng.uniform() * table_total;
                        let neg = match cumulative
                            .binary_search_by(|c| c.partial_cmp(&target).unwrap())
                        {
                            Ok(idx) => idx + 1,
                            Err(idx) => idx,
                        }
                        .min(n_nodes - 1);
                        if neg == context {
                            continue;
                        }
                        let v = contexts.row_mut(neg);
                        let s = sigmoid(-dot(&u, v));
                        pair_loss -= s.ln();
                        let coef = 1.0 - s; // sigmoid(u.v)
                        for k in 0..d {
                            grad_u[k] += coef * v[k];
                            v[k] -= step * coef * u[k];
                        }
                    }
                    let urow = centers.row_mut(center);
                    for k in 0..d {
                        urow[k] -= step * grad_u[k];
                    }
                    loss_sum += pair_loss;
                    loss_count += 1;
                }
            }
        }
        epoch_losses.push(loss_sum / loss_count.max(1) as f64);
    }

    (centers, epoch_losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::norm2;

    #[test]
    fn positive_pair_gradient_matches_finite_differences() {
        let mut rng = Rng::seeded(31);
        for _ in 0..20 {
            let u: Vec<f64> = (0..5).map(|_| rng.gaussian()).collect();
            let v: Vec<f64> = (0..5).map(|_| rng.gaussian()).collect();
            let (gu, gv) = positive_pair_grad(&u, &v);
            let h = 1e-6;
            for k in 0..5 {
                let mut up = u.clone();
                let mut um = u.clone();
                up[k] += h;
                um[k] -= h;
                let fd = (positive_pair_loss(&up, &v) - positive_pair_loss(&um, &v)) / (2.0 * h);
                let denom = fd.abs().max(1e-8);
                assert!(
                    (fd - gu[k]).abs() / denom < 1e-5,
                    "du[{k}]: fd {fd} analytic {}",
                    gu[k]
                );
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[k] += h;
                vm[k] -= h;
                let fd = (positive_pair_loss(&u, &vp) - positive_pair_loss(&u, &vm)) / (2.0 * h);
                let denom = fd.abs().max(1e-8);
                assert!((fd - gv[k]).abs() / denom < 1e-5);
            }
        }
    }

    fn pair_corpus() -> WalkCorpus {
        // two isolated repeating pairs: (a=0, b=1) and (c=2, d=3)
        let mut walks = Vec::new();
        for _ in 0..200 {
            walks.push(vec![0, 1, 0, 1, 0, 1]);
            walks.push(vec![2, 3, 2, 3, 2, 3]);
        }
        WalkCorpus {
            walks,
            walk_length: 6,
            walks_per_node: 200,
            p: 1.0,
            q: 1.0,
        }
    }

    #[test]
    fn cooccurring_nodes_end_up_closer_than_strangers() {
        let corpus = pair_corpus();
        let (m, _) = train_sgns(&corpus, 4, 8, 2, 3, 3, 0.05, 17);
        let cos = |a: usize, b: usize| {
            dot(m.row(a), m.row(b)) / (norm2(m.row(a)) * norm2(m.row(b)))
        };
        assert!(cos(0, 1) > cos(0, 2), "cos(a,b)={} cos(a,c)={}", cos(0, 1), cos(0, 2));
    }

    #[test]
    fn zero_epochs_returns_the_seeded_initialization() {
        let corpus = pair_corpus();
        let (m1, losses) = train_sgns(&corpus, 4, 6, 2, 3, 0, 0.05, 99);
        assert!(losses.is_empty());
        let (m2, _) = train_sgns(&corpus, 4, 6, 2, 3, 0, 0.05, 99);
        assert_eq!(m1, m2);
        // init is the seeded uniform draw, bounded by 0.5/d
        assert!(m1.data().iter().all(|&x| x.abs() <= 0.5 / 6.0));
        assert!(m1.data().iter().any(|&x| x != 0.0));
    }

    #[test]
    fn epoch_loss_is_non_increasing_early() {
        let corpus = pair_corpus();
        let (_, losses) = train_sgns(&corpus, 4, 8, 2, 3, 5, 0.05, 7);
        for i in 1..5 {
            assert!(
                losses[i] <= losses[i - 1] + 1e-9,
                "loss went up at epoch {i}: {:?}",
                losses
            );
        }
    }
}
