//! Isotonic calibration: pool-adjacent-violators fitting and cross-fitted
//! application. The fitted map stores one (score, value) pair per unique
//! training score; evaluation interpolates linearly between breakpoints and
//! clamps to the boundary values outside the fitted range.

use crate::classifier::{stratified_folds, ProbPredictor, TrainError};
use crate::rng::stable_hash;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationError {
    EmptyInput,
    LengthMismatch { left: usize, right: usize },
    NonFiniteScore,
}

impl fmt::Display for CalibrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibrationError::EmptyInput => write!(f, "no calibration points"),
            CalibrationError::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            CalibrationError::NonFiniteScore => write!(f, "scores must be finite"),
        }
    }
}

impl std::error::Error for CalibrationError {}

/// Monotone score-to-probability map: strictly increasing breakpoints with
/// non-decreasing fitted values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicMap {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl IsotonicMap {
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Evaluates the map: linear interpolation between breakpoints, clamped to
    /// the boundary values outside the fitted range.
    pub fn eval(&self, score: f64) -> f64 {
        let b = &self.breakpoints;
        let v = &self.values;
        if score <= b[0] {
            return v[0];
        }
        if score >= b[b.len() - 1] {
            return v[v.len() - 1];
        }
        // first breakpoint strictly greater than score
        let hi = b.partition_point(|&x| x <= score);
        let lo = hi - 1;
        if b[lo] == score {
            return v[lo];
        }
        let frac = (score - b[lo]) / (b[hi] - b[lo]);
        v[lo] + frac * (v[hi] - v[lo])
    }
}

/// Least-squares monotone (non-decreasing) fit by pool-adjacent-violators.
/// Input need not be sorted; exact score ties are merged with summed weights
/// before pooling.
pub fn pava(
    scores: &[f64],
    targets: &[f64],
    weights: Option<&[f64]>,
) -> Result<IsotonicMap, CalibrationError> {
    if scores.is_empty() {
        return Err(CalibrationError::EmptyInput);
    }
    if scores.len() != targets.len() {
        return Err(CalibrationError::LengthMismatch { left: scores.len(), right: targets.len() });
    }
    if let Some(w) = weights {
        if w.len() != scores.len() {
            return Err(CalibrationError::LengthMismatch { left: scores.len(), right: w.len() });
        }
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(CalibrationError::NonFiniteScore);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    // merge exact ties: one point per unique score, value kept as a weighted
    // mean so singletons stay bit-exact
    let mut points: Vec<(f64, f64, f64)> = Vec::new(); // (score, mean target, weight)
    for &i in &order {
        let w = weights.map_or(1.0, |ws| ws[i]);
        match points.last_mut() {
            Some(last) if last.0 == scores[i] => {
                let total = last.2 + w;
                last.1 = (last.1 * last.2 + targets[i] * w) / total;
                last.2 = total;
            }
            _ => points.push((scores[i], targets[i], w)),
        }
    }

    // PAVA over blocks: (value, weight, count of unique-score points)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(points.len());
    for &(_, mean, w) in &points {
        blocks.push((mean, w, 1));
        while blocks.len() >= 2 {
            let (v2, w2, c2) = blocks[blocks.len() - 1];
            let (v1, w1, c1) = blocks[blocks.len() - 2];
            if v1 <= v2 {
                break;
            }
            blocks.pop();
            blocks.pop();
            let w = w1 + w2;
            blocks.push(((v1 * w1 + v2 * w2) / w, w, c1 + c2));
        }
    }

    let mut breakpoints = Vec::with_capacity(points.len());
    let mut values = Vec::with_capacity(points.len());
    let mut idx = 0;
    for &(value, _, count) in &blocks {
        for _ in 0..count {
            breakpoints.push(points[idx].0);
            values.push(value);
            idx += 1;
        }
    }
    Ok(IsotonicMap { breakpoints, values })
}

/// Cross-fitted isotonic calibration: per stratified fold, train the base
/// model on the complement and fit PAVA on the out-of-fold (score, label)
/// pairs. The calibrated prediction is the mean over per-fold calibrated
/// outputs; callers wrap the result in their model container.
pub fn cross_fit_calibrate<M, F>(
    train: F,
    x: &[Vec<f64>],
    y: &[bool],
    folds: usize,
    seed: u64,
) -> Result<Vec<(M, IsotonicMap)>, TrainError>
where
    M: ProbPredictor,
    F: Fn(&[Vec<f64>], &[bool], u64) -> Result<M, TrainError>,
{
    let assignment = stratified_folds(y, folds, seed)?;
    let mut out = Vec::with_capacity(folds);
    for (fi, fold) in assignment.iter().enumerate() {
        let mut in_fold = vec![false; y.len()];
        for &i in fold {
            in_fold[i] = true;
        }
        let tx: Vec<Vec<f64>> =
            (0..y.len()).filter(|&i| !in_fold[i]).map(|i| x[i].clone()).collect();
        let ty: Vec<bool> = (0..y.len()).filter(|&i| !in_fold[i]).map(|i| y[i]).collect();
        let fold_seed =
            stable_hash(&[&seed.to_le_bytes(), b"calibrate", &(fi as u64).to_le_bytes()]);
        let base = train(&tx, &ty, fold_seed)?;

        let vx: Vec<Vec<f64>> = fold.iter().map(|&i| x[i].clone()).collect();
        let scores = base.predict(&vx);
        let targets: Vec<f64> = fold.iter().map(|&i| if y[i] { 1.0 } else { 0.0 }).collect();
        let map = pava(&scores, &targets, None)
            .map_err(|e| TrainError::InvalidModel(format!("calibration failed: {e}")))?;
        out.push((base, map));
    }
    Ok(out)
}
