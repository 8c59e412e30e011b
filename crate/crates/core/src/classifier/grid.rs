//! Stratified k-fold assignment and cross-validated grid search over the
//! fixed per-family hyperparameter grids, optimizing mean out-of-fold AUROC.

use super::{train_at, Family, HyperParams, ProbPredictor, TrainError};
use crate::baselines::Orientation;
use crate::eval::{auroc, ScoredLabels};
use crate::rng::derive_rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Logistic-regression C grid, in documented tie-break order.
pub fn logreg_grid() -> Vec<HyperParams> {
    [0.5, 2.0, 10.0].iter().map(|&c| HyperParams::LogReg { c }).collect()
}

/// Forest grid: max_depth (outer) x min_samples_split (inner).
pub fn forest_grid() -> Vec<HyperParams> {
    let mut grid = Vec::new();
    for &max_depth in &[3usize, 5, 10] {
        for &min_samples_split in &[2usize, 5, 10] {
            grid.push(HyperParams::Forest { max_depth, min_samples_split });
        }
    }
    grid
}

/// MLP hidden-layer grid.
pub fn mlp_grid() -> Vec<HyperParams> {
    [
        vec![5],
        vec![8],
        vec![10],
        vec![15],
        vec![20],
        vec![8, 4],
        vec![10, 5],
        vec![15, 8],
    ]
    .into_iter()
    .map(|hidden| HyperParams::Mlp { hidden })
    .collect()
}

pub fn grid_for(family: Family) -> Vec<HyperParams> {
    match family {
        Family::LogRegL1 => logreg_grid(),
        Family::RandomForest => forest_grid(),
        Family::Mlp => mlp_grid(),
    }
}

/// Seeded stratified fold assignment: each class is shuffled and dealt
/// round-robin, so every fold holds both classes. Requires at least `folds`
/// members per class.
pub fn stratified_folds(y: &[bool], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, TrainError> {
    let n_pos = y.iter().filter(|&&l| l).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(TrainError::SingleClass);
    }
    let needed = folds;
    if n_pos < needed || n_neg < needed {
        return Err(TrainError::TooFewRows { needed, got: n_pos.min(n_neg) });
    }
    let mut rng = derive_rng(seed, &[b"folds"]);
    let mut assignment = vec![Vec::new(); folds];
    for class in [true, false] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        members.shuffle(&mut rng);
        for (i, idx) in members.into_iter().enumerate() {
            assignment[i % folds].push(idx);
        }
    }
    for fold in &mut assignment {
        fold.sort_unstable();
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub hyperparams: HyperParams,
    pub mean_auroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: HyperParams,
    pub table: Vec<CvEntry>,
}

/// Cross-validated grid search. Ties go to the earliest grid point.
pub fn grid_search_cv(
    family: Family,
    x: &[Vec<f64>],
    y: &[bool],
    balance: bool,
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult, TrainError> {
    let assignment = stratified_folds(y, folds, seed)?;
    let grid = grid_for(family);
    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, usize)> = None;

    for (gi, hp) in grid.iter().enumerate() {
        let mut total = 0.0;
        for (fi, fold) in assignment.iter().enumerate() {
            let mut in_fold = vec![false; y.len()];
            for &i in fold {
                in_fold[i] = true;
            }
            let tx: Vec<Vec<f64>> =
                (0..y.len()).filter(|&i| !in_fold[i]).map(|i| x[i].clone()).collect();
            let ty: Vec<bool> = (0..y.len()).filter(|&i| !in_fold[i]).map(|i| y[i]).collect();
            let vx: Vec<Vec<f64>> = fold.iter().map(|&i| x[i].clone()).collect();
            let vy: Vec<bool> = fold.iter().map(|&i| y[i]).collect();

            let fit_seed = crate::rng::stable_hash(&[
                &seed.to_le_bytes(),
                b"cv",
                &(gi as u64).to_le_bytes(),
                &(fi as u64).to_le_bytes(),
            ]);
            let model = train_at(family, hp, &tx, &ty, balance, fit_seed)?;
            let scores = model.predict(&vx);
            // low p(correct) flags the incorrect class; this equals the
            // standard ROC-AUC of the classifier for the correct class
            let incorrect: Vec<bool> = vy.iter().map(|&l| !l).collect();
            let scored = ScoredLabels::new(scores, incorrect, Orientation::LowerMeansIncorrect)
                .expect("fold is non-empty");
            total += auroc(&scored).map_err(|_| TrainError::SingleClass)?;
        }
        let mean = total / folds as f64;
        table.push(CvEntry { hyperparams: hp.clone(), mean_auroc: mean });
        if best.is_none_or(|(b, _)| mean > b) {
            best = Some((mean, gi));
        }
    }
    let (_, best_idx) = best.expect("grid is non-empty");
    Ok(GridSearchResult { best: grid[best_idx].clone(), table })
}
