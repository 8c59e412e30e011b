//! Random forest classifier: 100 Gini trees on bootstrap samples with
//! floor(sqrt(d)) candidate features per split.
//!
//! Determinism rules: per-tree RNG streams derived from the forest seed,
//! candidate features evaluated in ascending index order, and equal-gain
//! splits resolved by lowest feature index then lowest threshold.

use super::TrainError;
use crate::rng::derive_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const N_TREES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Weighted fraction of the positive class in the leaf.
        p: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: Vec<TreeNode>,
    pub n_features: usize,
}

struct TreeBuilder<'a> {
    /// row-major n x d feature matrix
    flat: &'a [f64],
    y: &'a [bool],
    /// bootstrap multiplicity per row (0 for out-of-bag rows)
    mult: Vec<f64>,
    /// multiplicity times class weight
    weight: Vec<f64>,
    max_depth: usize,
    min_samples_split: f64,
    mtry: usize,
    d: usize,
}

impl TreeBuilder<'_> {
    /// Builds a node over `rows` (partitioned in place for the children);
    /// `sorted` is a reused scratch buffer.
    fn build(
        &self,
        rows: &mut [u32],
        depth: usize,
        rng: &mut ChaCha8Rng,
        sorted: &mut Vec<(f64, f64)>,
    ) -> TreeNode {
        let mut w1 = 0.0;
        let mut w0 = 0.0;
        let mut draws = 0.0;
        for &r in rows.iter() {
            let r = r as usize;
            draws += self.mult[r];
            if self.y[r] {
                w1 += self.weight[r];
            } else {
                w0 += self.weight[r];
            }
        }
        let leaf = TreeNode::Leaf { p: w1 / (w0 + w1) };
        if depth >= self.max_depth || draws < self.min_samples_split || w1 == 0.0 || w0 == 0.0 {
            return leaf;
        }

        // candidate features: mtry distinct draws, then ascending for tie-breaking
        let mut pool: Vec<usize> = (0..self.d).collect();
        for i in 0..self.mtry {
            let j = rng.gen_range(i..self.d);
            pool.swap(i, j);
        }
        let candidates = &mut pool[..self.mtry];
        candidates.sort_unstable();

        // minimizing weighted child Gini is maximizing
        // (wl1^2 + wl0^2)/wl + (wr1^2 + wr0^2)/wr
        let mut best: Option<(f64, usize, f64)> = None; // (score, feature, threshold)
        for &f in candidates.iter() {
            sorted.clear();
            // weight carries the label in its sign so the scan needs no lookups
            sorted.extend(rows.iter().map(|&r| {
                let r = r as usize;
                let w = if self.y[r] { self.weight[r] } else { -self.weight[r] };
                (self.flat[r * self.d + f], w)
            }));
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut wl1 = 0.0;
            let mut wl0 = 0.0;
            for i in 0..sorted.len() - 1 {
                let (v, w) = sorted[i];
                if w >= 0.0 {
                    wl1 += w;
                } else {
                    wl0 -= w;
                }
                let v_next = sorted[i + 1].0;
                if v == v_next {
                    continue;
                }
                let wr1 = w1 - wl1;
                let wr0 = w0 - wl0;
                let score = (wl1 * wl1 + wl0 * wl0) / (wl1 + wl0)
                    + (wr1 * wr1 + wr0 * wr0) / (wr1 + wr0);
                // strict improvement only: ascending candidate and threshold
                // order then resolves exact ties toward the lowest pair
                if best.is_none_or(|(bs, _, _)| score > bs) {
                    best = Some((score, f, v + (v_next - v) / 2.0));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return leaf; // all candidate features constant on this node
        };
        // in-place partition: rows <= threshold to the front
        let mut mid = 0;
        for i in 0..rows.len() {
            if self.flat[rows[i] as usize * self.d + feature] <= threshold {
                rows.swap(i, mid);
                mid += 1;
            }
        }
        let (left_rows, right_rows) = rows.split_at_mut(mid);
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(self.build(left_rows, depth + 1, rng, sorted)),
            right: Box::new(self.build(right_rows, depth + 1, rng, sorted)),
        }
    }
}

/// Trains a 100-tree forest. With `balance`, per-tree class weights are set
/// inversely proportional to the in-bootstrap class counts.
pub fn train_random_forest(
    x: &[Vec<f64>],
    y: &[bool],
    max_depth: usize,
    min_samples_split: usize,
    balance: bool,
    seed: u64,
) -> Result<ForestParams, TrainError> {
    if x.is_empty() || x.len() != y.len() {
        return Err(TrainError::EmptyInput);
    }
    let n_pos = y.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(TrainError::SingleClass);
    }
    let n = x.len();
    let d = x[0].len();
    let mtry = ((d as f64).sqrt().floor() as usize).max(1);
    let flat: Vec<f64> = x.iter().flat_map(|row| row.iter().copied()).collect();

    let trees = (0..N_TREES)
        .map(|t| {
            let mut rng = derive_rng(seed, &[b"tree", &(t as u64).to_le_bytes()]);
            let mut mult = vec![0.0f64; n];
            for _ in 0..n {
                mult[rng.gen_range(0..n)] += 1.0;
            }
            let (mut c1, mut c0) = (0.0, 0.0);
            for (i, &m) in mult.iter().enumerate() {
                if y[i] {
                    c1 += m;
                } else {
                    c0 += m;
                }
            }
            let (cw0, cw1) = if balance && c0 > 0.0 && c1 > 0.0 {
                (n as f64 / (2.0 * c0), n as f64 / (2.0 * c1))
            } else {
                (1.0, 1.0)
            };
            let weight: Vec<f64> =
                mult.iter().enumerate().map(|(i, &m)| m * if y[i] { cw1 } else { cw0 }).collect();
            let mut rows: Vec<u32> = (0..n as u32).filter(|&i| mult[i as usize] > 0.0).collect();
            let builder = TreeBuilder {
                flat: &flat,
                y,
                mult,
                weight,
                max_depth,
                min_samples_split: min_samples_split as f64,
                mtry,
                d,
            };
            let mut sorted = Vec::with_capacity(rows.len());
            builder.build(&mut rows, 0, &mut rng, &mut sorted)
        })
        .collect();

    Ok(ForestParams { trees, n_features: d })
}

fn predict_tree(node: &TreeNode, row: &[f64]) -> f64 {
    match node {
        TreeNode::Leaf { p } => *p,
        TreeNode::Split { feature, threshold, left, right } => {
            if row[*feature] <= *threshold {
                predict_tree(left, row)
            } else {
                predict_tree(right, row)
            }
        }
    }
}

/// Mean of leaf fractions across trees; in [0, 1] without clamping.
pub fn forest_predict(params: &ForestParams, x: &[Vec<f64>]) -> Vec<f64> {
    x.iter()
        .map(|row| {
            params.trees.iter().map(|t| predict_tree(t, row)).sum::<f64>()
                / params.trees.len() as f64
        })
        .collect()
}
