//! Fully connected net with ReLU hidden layers and a sigmoid output, trained
//! by mini-batch Adam with early stopping on a 10% stratified validation split
//! (patience 10, max 200 epochs, best weights restored). L2 penalty
//! alpha = 0.001 on weight matrices, scaled by batch size.

use super::TrainError;
use crate::rng::derive_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const ALPHA: f64 = 0.001;
pub const MAX_EPOCHS: usize = 200;
pub const PATIENCE: usize = 10;
pub const EARLY_STOP_TOL: f64 = 1e-4;
const LEARNING_RATE: f64 = 1e-3;
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// One dense layer; `weights` is row-major with shape (rows = out, cols = in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpLayer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// Hidden layers followed by the single-unit output layer.
    pub layers: Vec<MlpLayer>,
}

impl MlpParams {
    pub fn n_inputs(&self) -> usize {
        self.layers[0].cols
    }

    fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Glorot-uniform initialization; deterministic in the RNG stream.
pub fn init_mlp(n_in: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> MlpParams {
    let mut dims = vec![n_in];
    dims.extend_from_slice(hidden);
    dims.push(1);
    let layers = dims
        .windows(2)
        .map(|w| {
            let (cols, rows) = (w[0], w[1]);
            let bound = (6.0 / (cols + rows) as f64).sqrt();
            let weights = (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect();
            let bias = (0..rows).map(|_| rng.gen_range(-bound..bound)).collect();
            MlpLayer { rows, cols, weights, bias }
        })
        .collect();
    MlpParams { layers }
}

/// Reused forward/backward buffers: post-activations are stored concatenated
/// per layer so a batch pass allocates nothing.
struct Workspace {
    acts: Vec<f64>,
    offsets: Vec<usize>,
    delta: Vec<f64>,
    delta_next: Vec<f64>,
}

impl Workspace {
    fn new(params: &MlpParams) -> Self {
        let mut offsets = Vec::with_capacity(params.layers.len());
        let mut total = 0;
        let mut widest = 1;
        for layer in &params.layers {
            offsets.push(total);
            total += layer.rows;
            widest = widest.max(layer.rows).max(layer.cols);
        }
        Workspace {
            acts: vec![0.0; total],
            offsets,
            delta: vec![0.0; widest],
            delta_next: vec![0.0; widest],
        }
    }
}

/// Forward pass; fills `ws.acts`, returns the output probability.
fn forward_ws(params: &MlpParams, input: &[f64], ws: &mut Workspace) -> f64 {
    let last = params.layers.len() - 1;
    for (li, layer) in params.layers.iter().enumerate() {
        let (done, rest) = ws.acts.split_at_mut(ws.offsets[li]);
        let prev: &[f64] = if li == 0 { input } else { &done[ws.offsets[li - 1]..] };
        let out = &mut rest[..layer.rows];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
            let z: f64 = row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>() + layer.bias[r];
            *o = if li == last { sigmoid(z) } else { z.max(0.0) };
        }
    }
    ws.acts[ws.offsets[last]]
}

/// Backward pass for one sample; accumulates into `grads` (flattened
/// [w0, b0, w1, b1, ...] row-major order).
fn backward_ws(params: &MlpParams, input: &[f64], label: bool, ws: &mut Workspace, grads: &mut [f64]) {
    let last = params.layers.len() - 1;
    let p = ws.acts[ws.offsets[last]];
    // sigmoid-CE pairing: output delta is (p - y)
    ws.delta[0] = p - if label { 1.0 } else { 0.0 };
    let mut offset_end = grads.len();
    for li in (0..params.layers.len()).rev() {
        let layer = &params.layers[li];
        let input: &[f64] = if li == 0 {
            input
        } else {
            &ws.acts[ws.offsets[li - 1]..ws.offsets[li - 1] + layer.cols]
        };
        let offset = offset_end - layer.weights.len() - layer.bias.len();
        for r in 0..layer.rows {
            let g = ws.delta[r];
            if g != 0.0 {
                let wrow = &mut grads[offset + r * layer.cols..offset + (r + 1) * layer.cols];
                for (gw, &a) in wrow.iter_mut().zip(input) {
                    *gw += g * a;
                }
            }
            grads[offset + layer.weights.len() + r] += g;
        }
        if li > 0 {
            for (c, nd) in ws.delta_next.iter_mut().enumerate().take(layer.cols) {
                // ReLU derivative from the stored post-activation
                if input[c] > 0.0 {
                    let mut s = 0.0;
                    for r in 0..layer.rows {
                        s += layer.weights[r * layer.cols + c] * ws.delta[r];
                    }
                    *nd = s;
                } else {
                    *nd = 0.0;
                }
            }
            std::mem::swap(&mut ws.delta, &mut ws.delta_next);
        }
        offset_end = offset;
    }
}

fn logit_of(p: f64) -> f64 {
    let p = p.clamp(1e-15, 1.0 - 1e-15);
    (p / (1.0 - p)).ln()
}

/// Mean CE + alpha/(2n) * ||W||^2 over the indexed batch, gradient written
/// into `grads` (zeroed here).
fn batch_loss_grad(
    params: &MlpParams,
    x: &[Vec<f64>],
    y: &[bool],
    idx: &[usize],
    alpha: f64,
    grads: &mut [f64],
    ws: &mut Workspace,
) -> f64 {
    grads.fill(0.0);
    let n = idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let p = forward_ws(params, &x[i], ws);
        let z = logit_of(p);
        loss += softplus(z) - if y[i] { z } else { 0.0 };
        backward_ws(params, &x[i], y[i], ws, grads);
    }
    loss /= n;
    for g in grads.iter_mut() {
        *g /= n;
    }
    let mut offset = 0;
    for layer in &params.layers {
        for (i, &w) in layer.weights.iter().enumerate() {
            loss += alpha / (2.0 * n) * w * w;
            grads[offset + i] += alpha * w / n;
        }
        offset += layer.weights.len() + layer.bias.len();
    }
    loss
}

/// Full-batch objective and gradient: mean cross-entropy plus
/// alpha/(2n) * sum of squared weights (biases unpenalized). Used by training
/// batches and by finite-difference checks.
pub fn loss_and_gradient(
    params: &MlpParams,
    x: &[Vec<f64>],
    y: &[bool],
    alpha: f64,
) -> (f64, Vec<f64>) {
    let mut ws = Workspace::new(params);
    let mut grads = vec![0.0; params.n_params()];
    let idx: Vec<usize> = (0..x.len()).collect();
    let loss = batch_loss_grad(params, x, y, &idx, alpha, &mut grads, &mut ws);
    (loss, grads)
}

pub fn mlp_predict(params: &MlpParams, x: &[Vec<f64>]) -> Vec<f64> {
    let mut ws = Workspace::new(params);
    x.iter().map(|row| forward_ws(params, row, &mut ws)).collect()
}

fn mean_ce(params: &MlpParams, x: &[Vec<f64>], y: &[bool], idx: &[usize], ws: &mut Workspace) -> f64 {
    let mut loss = 0.0;
    for &i in idx {
        let p = forward_ws(params, &x[i], ws);
        let z = logit_of(p);
        loss += softplus(z) - if y[i] { z } else { 0.0 };
    }
    loss / idx.len() as f64
}

/// Oversamples the minority class with replacement to parity; returns row
/// indices into the original data (originals first, then the extra draws).
pub fn oversample_to_parity(y: &[bool], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i]).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| !y[i]).collect();
    let mut idx: Vec<usize> = (0..y.len()).collect();
    let (minority, deficit) = if pos.len() < neg.len() {
        (&pos, neg.len() - pos.len())
    } else {
        (&neg, pos.len() - neg.len())
    };
    if !minority.is_empty() {
        for _ in 0..deficit {
            idx.push(minority[rng.gen_range(0..minority.len())]);
        }
    }
    idx
}

/// Stratified 10% validation split over positions 0..n; returns (train, val).
fn validation_split(y: &[bool], rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [true, false] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(rng);
        let n_val = ((members.len() as f64) * 0.1).round() as usize;
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    if val.is_empty() {
        // guarantee a validation point; take the last training index
        val.push(train.pop().expect("n >= 10"));
    }
    (train, val)
}

/// Trains the MLP. With `balance`, the minority class is oversampled with
/// replacement to parity before the validation split.
pub fn train_mlp(
    x: &[Vec<f64>],
    y: &[bool],
    hidden: &[usize],
    seed: u64,
    balance: bool,
) -> Result<MlpParams, TrainError> {
    if x.is_empty() || x.len() != y.len() {
        return Err(TrainError::EmptyInput);
    }
    if x.len() < 10 {
        return Err(TrainError::TooFewRows { needed: 10, got: x.len() });
    }
    let n_pos = y.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == y.len() {
        return Err(TrainError::SingleClass);
    }

    let mut rng = derive_rng(seed, &[b"mlp"]);
    let rows: Vec<usize> =
        if balance { oversample_to_parity(y, &mut rng) } else { (0..y.len()).collect() };
    let xs: Vec<Vec<f64>> = rows.iter().map(|&i| x[i].clone()).collect();
    let ys: Vec<bool> = rows.iter().map(|&i| y[i]).collect();

    let (train_idx, val_idx) = validation_split(&ys, &mut rng);
    let mut params = init_mlp(x[0].len(), hidden, &mut rng);
    let n_params = params.n_params();
    let mut ws = Workspace::new(&params);
    let mut grads = vec![0.0; n_params];
    let mut adam_m = vec![0.0; n_params];
    let mut adam_v = vec![0.0; n_params];
    let mut t = 0u64;

    let batch_size = train_idx.len().min(200);
    let mut order = train_idx.clone();
    let mut best = f64::INFINITY;
    let mut best_params = params.clone();
    let mut bad_epochs = 0;

    for _epoch in 0..MAX_EPOCHS {
        order.shuffle(&mut rng);
        for batch in order.chunks(batch_size) {
            batch_loss_grad(&params, &xs, &ys, batch, ALPHA, &mut grads, &mut ws);
            t += 1;
            let bc1 = 1.0 - BETA1.powi(t as i32);
            let bc2 = 1.0 - BETA2.powi(t as i32);
            let mut offset = 0;
            for layer in &mut params.layers {
                for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                    let g = grads[offset];
                    adam_m[offset] = BETA1 * adam_m[offset] + (1.0 - BETA1) * g;
                    adam_v[offset] = BETA2 * adam_v[offset] + (1.0 - BETA2) * g * g;
                    *w -= LEARNING_RATE * (adam_m[offset] / bc1)
                        / ((adam_v[offset] / bc2).sqrt() + ADAM_EPS);
                    offset += 1;
                }
            }
        }
        let val_loss = mean_ce(&params, &xs, &ys, &val_idx, &mut ws);
        if val_loss < best {
            best = val_loss;
            best_params.clone_from(&params);
        }
        if val_loss > best - EARLY_STOP_TOL {
            bad_epochs += 1;
            if bad_epochs >= PATIENCE {
                break;
            }
        } else {
            bad_epochs = 0;
        }
    }
    Ok(best_params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::Orientation;
    use crate::eval::{auroc, ScoredLabels};

    fn blobs(n_per: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = derive_rng(seed, &[b"blobs"]);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..2 * n_per {
            let label = i % 2 == 0;
            let center = if label { sep / 2.0 } else { -sep / 2.0 };
            x.push(vec![
                center + crate::rng::standard_normal(&mut rng),
                center + crate::rng::standard_normal(&mut rng),
            ]);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn separable_blobs_reach_high_auroc() {
        // 4-sigma separation between class means
        let (x, y) = blobs(60, 4.0, 3);
        let params = train_mlp(&x, &y, &[8], 42, false).unwrap();
        let p = mlp_predict(&params, &x);
        let scored = ScoredLabels::new(p, y.clone(), Orientation::HigherMeansIncorrect).unwrap();
        assert!(auroc(&scored).unwrap() >= 0.95);
    }

    #[test]
    fn same_seed_identical_weights() {
        let (x, y) = blobs(20, 2.0, 9);
        let a = train_mlp(&x, &y, &[5], 7, true).unwrap();
        let b = train_mlp(&x, &y, &[5], 7, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uninformative_features_predict_base_rate() {
        let n = 1500;
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![1.0, 1.0]).collect();
        let y: Vec<bool> = (0..n).map(|i| i % 10 < 7).collect(); // 70% positive
        let params = train_mlp(&x, &y, &[5], 42, false).unwrap();
        let p = mlp_predict(&params, &x);
        assert!((p[0] - 0.7).abs() < 0.05, "got {}", p[0]);
    }

    #[test]
    fn too_few_rows_rejected() {
        let x = vec![vec![0.0]; 5];
        let y = vec![true, false, true, false, true];
        assert!(matches!(
            train_mlp(&x, &y, &[5], 1, false),
            Err(TrainError::TooFewRows { .. })
        ));
    }

    #[test]
    fn oversampling_balances_classes() {
        let y = vec![true, false, false, false, false, false];
        let mut rng = derive_rng(1, &[b"os"]);
        let idx = oversample_to_parity(&y, &mut rng);
        let pos = idx.iter().filter(|&&i| y[i]).count();
        let neg = idx.len() - pos;
        assert_eq!(pos, neg);
        // originals all kept
        assert_eq!(&idx[..6], &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn outputs_bounded_for_adversarial_inputs() {
        let (x, y) = blobs(20, 2.0, 5);
        let params = train_mlp(&x, &y, &[8, 4], 11, false).unwrap();
        let probe = vec![vec![1e6, -1e6], vec![-1e6, 1e6], vec![0.0, 0.0]];
        for p in mlp_predict(&params, &probe) {
            assert!((0.0..=1.0).contains(&p) && p.is_finite());
        }
    }

    #[test]
    fn loss_and_gradient_matches_two_layer_shapes() {
        let mut rng = derive_rng(3, &[b"shapes"]);
        let params = init_mlp(4, &[6, 3], &mut rng);
        let x: Vec<Vec<f64>> = (0..8).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<bool> = (0..8).map(|i| i % 2 == 0).collect();
        let (loss, grads) = loss_and_gradient(&params, &x, &y, ALPHA);
        assert!(loss.is_finite() && loss > 0.0);
        assert_eq!(grads.len(), 4 * 6 + 6 + 6 * 3 + 3 + 3 + 1);
    }
}
