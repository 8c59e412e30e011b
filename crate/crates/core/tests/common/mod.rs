//! Independent reference implementations used as oracles by the acceptance
//! and property suites. Nothing here may call the code paths it checks.

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};

/// abs/rel mixed closeness: |a-b| <= tol * max(1, |a|, |b|).
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!(close(a, b, tol), "{what}: {a} vs {b} (tol {tol})");
}

// --- arbitrary-precision truncated entropy ---------------------------------

/// -sum exp(lp) * lp evaluated at 192-bit precision.
pub fn entropy_bigfloat(logprobs: &[f64]) -> f64 {
    let precision = 192;
    let rm = RoundingMode::ToEven;
    let mut consts = Consts::new().expect("constants cache");
    let mut acc = BigFloat::from_f64(0.0, precision);
    for &lp in logprobs {
        let x = BigFloat::from_f64(lp, precision);
        let p = x.exp(precision, rm, &mut consts);
        acc = acc.add(&p.mul(&x, precision, rm), precision, rm);
    }
    let neg = acc.neg();
    format!("{neg}").parse::<f64>().expect("bigfloat formats as a float")
}

// --- brute-force profile statistics -----------------------------------------

pub struct BruteProfile {
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub q10: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q90: f64,
    pub skew: f64,
    pub kurt: f64,
    pub sea: f64,
}

/// Sorting-based quantile at rank (n-1)q, written independently.
pub fn brute_quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let pos = q * (n as f64 - 1.0);
    let below = pos.floor() as usize;
    let above = (below + 1).min(n - 1);
    let w = pos - below as f64;
    sorted[below] * (1.0 - w) + sorted[above] * w
}

/// Direct moment sums; same degeneracy conventions as the contract
/// (population std, g1/g2, zeros for shapeless cases).
pub fn brute_profile(values: &[f64]) -> BruteProfile {
    let n = values.len() as f64;
    let sea = values.iter().fold(0.0, |a, &v| a + v);
    let mean = sea / n;
    let mut max = values[0];
    for &v in values {
        if v > max {
            max = v;
        }
    }
    let m = |k: u32| values.iter().map(|&v| (v - mean).powi(k as i32)).sum::<f64>() / n;
    let m2 = m(2);
    let degenerate = m2 <= 1e-24;
    let skew =
        if degenerate || values.len() < 3 { 0.0 } else { m(3) / (m2.sqrt() * m2.sqrt() * m2.sqrt()) };
    let kurt = if degenerate || values.len() < 4 { 0.0 } else { m(4) / (m2 * m2) - 3.0 };
    BruteProfile {
        max,
        mean,
        std: m2.sqrt(),
        q10: brute_quantile(values, 0.10),
        q25: brute_quantile(values, 0.25),
        q50: brute_quantile(values, 0.50),
        q75: brute_quantile(values, 0.75),
        q90: brute_quantile(values, 0.90),
        skew,
        kurt,
        sea,
    }
}

// --- exhaustive rank statistics ----------------------------------------------

/// AUROC by O(n^2) pair counting: ties earn half credit.
pub fn auroc_pair_counting(scores: &[f64], incorrect: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !incorrect[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if incorrect[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Classic d^2 formula; valid only for tie-free data.
pub fn spearman_d2_formula(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; n];
        for (pos, &idx) in order.iter().enumerate() {
            r[idx] = (pos + 1) as f64;
        }
        r
    };
    let rx = rank(x);
    let ry = rank(y);
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - 6.0 * d2 / (n as f64 * ((n * n - 1) as f64))
}

/// Pearson of average ranks with an independently written rank routine.
pub fn spearman_rank_pearson(x: &[f64], y: &[f64]) -> f64 {
    let avg_rank = |v: &[f64]| -> Vec<f64> {
        let n = v.len();
        let mut r = vec![0.0; n];
        for i in 0..n {
            let mut less = 0usize;
            let mut equal = 0usize;
            for j in 0..n {
                if v[j] < v[i] {
                    less += 1;
                } else if v[j] == v[i] {
                    equal += 1;
                }
            }
            // average of positions less+1 ..= less+equal
            r[i] = less as f64 + (equal as f64 + 1.0) / 2.0;
        }
        r
    };
    let rx = avg_rank(x);
    let ry = avg_rank(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

// --- exhaustive isotonic fits -------------------------------------------------

/// Optimal monotone least-squares fit by enumerating all 2^(n-1) contiguous
/// partitions and keeping the best whose block means are non-decreasing.
/// The isotonic optimum is a block-mean fit, so the minimum over this family
/// is exact.
pub fn isotonic_partition_oracle(targets: &[f64], weights: &[f64]) -> (Vec<f64>, f64) {
    let n = targets.len();
    assert!((1..=20).contains(&n));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0..(1u32 << (n - 1)) {
        // bit i set: a block boundary between i and i+1
        let mut fitted = vec![0.0; n];
        let mut start = 0;
        let mut prev_mean = f64::NEG_INFINITY;
        let mut feasible = true;
        for i in 0..n {
            let boundary = i + 1 == n || mask & (1 << i) != 0;
            if boundary {
                let mut tw = 0.0;
                let mut ts = 0.0;
                for j in start..=i {
                    tw += weights[j];
                    ts += weights[j] * targets[j];
                }
                let mean = ts / tw;
                if mean < prev_mean {
                    feasible = false;
                    break;
                }
                for f in fitted.iter_mut().take(i + 1).skip(start) {
                    *f = mean;
                }
                prev_mean = mean;
                start = i + 1;
            }
        }
        if !feasible {
            continue;
        }
        let sse: f64 = (0..n).map(|i| weights[i] * (fitted[i] - targets[i]).powi(2)).sum();
        if best.as_ref().is_none_or(|(_, b)| sse < *b) {
            best = Some((fitted, sse));
        }
    }
    best.expect("identity partition is always feasible")
}

/// Minimum SSE over all non-decreasing sequences drawn from a value grid.
pub fn grid_monotone_min_sse(targets: &[f64], grid: &[f64]) -> f64 {
    fn recurse(targets: &[f64], grid: &[f64], pos: usize, min_idx: usize, acc: f64, best: &mut f64) {
        if pos == targets.len() {
            *best = best.min(acc);
            return;
        }
        for (gi, &g) in grid.iter().enumerate().skip(min_idx) {
            let a = acc + (g - targets[pos]) * (g - targets[pos]);
            if a < *best {
                recurse(targets, grid, pos + 1, gi, a, best);
            }
        }
    }
    let mut best = f64::INFINITY;
    recurse(targets, grid, 0, 0, 0.0, &mut best);
    best
}

// --- calibration quality -------------------------------------------------------

/// Expected calibration error with equal-width bins.
pub fn ece(probs: &[f64], labels: &[bool], bins: usize) -> f64 {
    let mut conf = vec![0.0; bins];
    let mut hits = vec![0.0; bins];
    let mut count = vec![0.0; bins];
    for (&p, &l) in probs.iter().zip(labels) {
        let b = ((p * bins as f64) as usize).min(bins - 1);
        conf[b] += p;
        hits[b] += if l { 1.0 } else { 0.0 };
        count[b] += 1.0;
    }
    let n = probs.len() as f64;
    (0..bins)
        .filter(|&b| count[b] > 0.0)
        .map(|b| count[b] / n * ((hits[b] / count[b]) - (conf[b] / count[b])).abs())
        .sum()
}
