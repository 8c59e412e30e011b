//! Correctness classifiers: z-scaling, the three model families with their
//! fixed hyperparameter grids, cross-validated grid search, class balancing,
//! and the persistable trained-model container.

pub mod forest;
pub mod grid;
pub mod logreg;
pub mod mlp;

use crate::cache::FeatureRecord;
use crate::calibration::{cross_fit_calibrate, IsotonicMap};
use crate::profile::{FeatureSubset, FEATURE_NAMES};
use crate::rng::stable_hash;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

pub use forest::{forest_predict, train_random_forest, ForestParams, TreeNode};
pub use grid::{grid_search_cv, stratified_folds, CvEntry, GridSearchResult};
pub use logreg::{logreg_objective, logreg_predict, train_logreg_l1, LogRegParams};
pub use mlp::{init_mlp, loss_and_gradient, mlp_predict, train_mlp, MlpParams};

/// Model file schema version.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    SingleClass,
    TooFewRows { needed: usize, got: usize },
    MissingLabels,
    DimensionMismatch { expected: usize, got: usize },
    EmptyInput,
    MissingDomain(String),
    InvalidModel(String),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::SingleClass => write!(f, "training data has a single class"),
            TrainError::TooFewRows { needed, got } => {
                write!(f, "too few rows: need {needed} per class, got {got}")
            }
            TrainError::MissingLabels => write!(f, "training rows must be labeled"),
            TrainError::DimensionMismatch { expected, got } => {
                write!(f, "feature dimension mismatch: expected {expected}, got {got}")
            }
            TrainError::EmptyInput => write!(f, "empty input"),
            TrainError::MissingDomain(d) => write!(f, "no records for domain \"{d}\""),
            TrainError::InvalidModel(m) => write!(f, "invalid model file: {m}"),
        }
    }
}

impl std::error::Error for TrainError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "logreg_l1")]
    LogRegL1,
    #[serde(rename = "random_forest")]
    RandomForest,
    #[serde(rename = "mlp")]
    Mlp,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::LogRegL1, Family::RandomForest, Family::Mlp];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::LogRegL1 => "logreg_l1",
            Family::RandomForest => "random_forest",
            Family::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "logreg_l1" => Ok(Family::LogRegL1),
            "random_forest" => Ok(Family::RandomForest),
            "mlp" => Ok(Family::Mlp),
            other => Err(format!("unknown family \"{other}\"")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HyperParams {
    LogReg { c: f64 },
    Forest { max_depth: usize, min_samples_split: usize },
    Mlp { hidden: Vec<usize> },
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperParams::LogReg { c } => write!(f, "C={c}"),
            HyperParams::Forest { max_depth, min_samples_split } => {
                write!(f, "max_depth={max_depth},min_samples_split={min_samples_split}")
            }
            HyperParams::Mlp { hidden } => {
                let dims: Vec<String> = hidden.iter().map(|h| h.to_string()).collect();
                write!(f, "hidden=({})", dims.join(","))
            }
        }
    }
}

/// Training request for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub family: Family,
    pub balance: bool,
    pub calibrate: bool,
    pub feature_subset: FeatureSubset,
    pub seed: u64,
    pub cv_folds: usize,
}

impl TrainConfig {
    pub fn new(family: Family) -> Self {
        TrainConfig {
            family,
            balance: false,
            calibrate: false,
            feature_subset: FeatureSubset::full11(),
            seed: 42,
            cv_folds: 5,
        }
    }

    pub fn with_balance(mut self, balance: bool) -> Self {
        self.balance = balance;
        self
    }

    pub fn with_calibrate(mut self, calibrate: bool) -> Self {
        self.calibrate = calibrate;
        self
    }

    pub fn with_subset(mut self, subset: FeatureSubset) -> Self {
        self.feature_subset = subset;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Per-feature standardization fit on training-group statistics.
/// Zero-variance features store std = 1 so they map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScaler {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl ZScaler {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(self.mean.iter().zip(&self.std)).map(|(&v, (&m, &s))| (v - m) / s).collect()
    }

    pub fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.apply_row(r)).collect()
    }
}

/// Fits a z-scaler (population std) on at least two rows.
pub fn fit_zscaler(x: &[Vec<f64>]) -> Result<ZScaler, TrainError> {
    if x.len() < 2 {
        return Err(TrainError::TooFewRows { needed: 2, got: x.len() });
    }
    let d = x[0].len();
    let n = x.len() as f64;
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for row in x {
        for (j, &v) in row.iter().enumerate() {
            var[j] += (v - mean[j]) * (v - mean[j]);
        }
    }
    let std = var.iter().map(|&v| {
        let s = (v / n).sqrt();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    });
    Ok(ZScaler { mean, std: std.collect() })
}

/// Anything that maps scaled feature rows to correctness probabilities.
pub trait ProbPredictor {
    fn predict(&self, x: &[Vec<f64>]) -> Vec<f64>;
}

/// Fitted parameters of one base model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    LogReg(LogRegParams),
    Forest(ForestParams),
    Mlp(MlpParams),
}

impl ProbPredictor for ModelParams {
    fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        match self {
            ModelParams::LogReg(p) => logreg_predict(p, x),
            ModelParams::Forest(p) => forest_predict(p, x),
            ModelParams::Mlp(p) => mlp_predict(p, x),
        }
    }
}

impl ModelParams {
    fn n_inputs(&self) -> Option<usize> {
        match self {
            ModelParams::LogReg(p) => Some(p.weights.len()),
            ModelParams::Forest(p) => Some(p.n_features),
            ModelParams::Mlp(p) => Some(p.n_inputs()),
        }
    }
}

/// One fold of a cross-fitted calibrated ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedFold {
    pub base: ModelParams,
    pub map: IsotonicMap,
}

/// Either a single base model or the 5-fold calibrated ensemble whose
/// prediction is the mean of the per-fold calibrated outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predictor {
    Single(ModelParams),
    CrossFitted(Vec<CalibratedFold>),
}

impl Predictor {
    fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        match self {
            Predictor::Single(m) => m.predict(x),
            Predictor::CrossFitted(folds) => {
                let mut acc = vec![0.0; x.len()];
                for fold in folds {
                    for (a, s) in acc.iter_mut().zip(fold.base.predict(x)) {
                        *a += fold.map.eval(s);
                    }
                }
                for a in &mut acc {
                    *a /= folds.len() as f64;
                }
                acc
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    /// Sorted training-group domain ids.
    pub group_domains: Vec<String>,
    pub seed: u64,
    pub balance: bool,
    pub calibrate: bool,
    pub chosen_hyperparams: HyperParams,
    pub cv_table: Vec<CvEntry>,
    pub n_rows: usize,
}

impl TrainMeta {
    pub fn group_id(&self) -> String {
        self.group_domains.join("+")
    }
}

/// A trained, persistable correctness model: subset selection, scaler,
/// predictor, and training metadata. Serializes as self-describing JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectnessModel {
    pub version: u32,
    pub family: Family,
    pub feature_names: Vec<String>,
    pub subset: FeatureSubset,
    pub scaler: ZScaler,
    pub predictor: Predictor,
    pub meta: TrainMeta,
}

impl CorrectnessModel {
    /// Predicts correctness probabilities for full 11-feature rows; subset
    /// selection and z-scaling happen internally.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, TrainError> {
        let expected = self.feature_names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != expected) {
            return Err(TrainError::DimensionMismatch { expected, got: bad.len() });
        }
        let scaled: Vec<Vec<f64>> =
            rows.iter().map(|r| self.scaler.apply_row(&self.subset.select(r))).collect();
        Ok(self.predictor.predict(&scaled))
    }

    pub fn predict_records(&self, records: &[FeatureRecord]) -> Result<Vec<f64>, TrainError> {
        let rows: Vec<Vec<f64>> = records.iter().map(|r| r.features.to_vec()).collect();
        self.predict_proba(&rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        let model: CorrectnessModel =
            serde_json::from_str(text).map_err(|e| TrainError::InvalidModel(e.to_string()))?;
        if model.version != MODEL_VERSION {
            return Err(TrainError::InvalidModel(format!(
                "unsupported model version {}",
                model.version
            )));
        }
        if model.feature_names != FEATURE_NAMES {
            return Err(TrainError::InvalidModel("unexpected feature order".into()));
        }
        if model.scaler.dim() != model.subset.len() {
            return Err(TrainError::InvalidModel("scaler/subset dimension mismatch".into()));
        }
        let check_dims = |m: &ModelParams| -> Result<(), TrainError> {
            match m.n_inputs() {
                Some(d) if d == model.subset.len() => Ok(()),
                Some(d) => Err(TrainError::InvalidModel(format!(
                    "predictor expects {d} features, subset has {}",
                    model.subset.len()
                ))),
                None => Ok(()),
            }
        };
        match &model.predictor {
            Predictor::Single(m) => check_dims(m)?,
            Predictor::CrossFitted(folds) => {
                if folds.is_empty() {
                    return Err(TrainError::InvalidModel("empty calibrated ensemble".into()));
                }
                for f in folds {
                    check_dims(&f.base)?;
                }
            }
        }
        Ok(model)
    }
}

/// Trains one family at fixed hyperparameters on already-scaled data.
pub fn train_at(
    family: Family,
    hp: &HyperParams,
    x: &[Vec<f64>],
    y: &[bool],
    balance: bool,
    seed: u64,
) -> Result<ModelParams, TrainError> {
    match (family, hp) {
        (Family::LogRegL1, HyperParams::LogReg { c }) => {
            let class_weights = if balance {
                let n = y.len() as f64;
                let n_pos = y.iter().filter(|&&l| l).count() as f64;
                Some((n / (2.0 * (n - n_pos)), n / (2.0 * n_pos)))
            } else {
                None
            };
            Ok(ModelParams::LogReg(train_logreg_l1(x, y, *c, class_weights)?))
        }
        (Family::RandomForest, HyperParams::Forest { max_depth, min_samples_split }) => {
            Ok(ModelParams::Forest(train_random_forest(
                x,
                y,
                *max_depth,
                *min_samples_split,
                balance,
                seed,
            )?))
        }
        (Family::Mlp, HyperParams::Mlp { hidden }) => {
            Ok(ModelParams::Mlp(train_mlp(x, y, hidden, seed, balance)?))
        }
        _ => Err(TrainError::InvalidModel("hyperparameters do not match family".into())),
    }
}

/// End-to-end training on a labeled group of domains: subset selection,
/// z-scaling on group statistics, grid search, final fit, and optional
/// cross-fitted isotonic calibration.
pub fn train_on_group(
    records: &[FeatureRecord],
    group: &BTreeSet<String>,
    config: &TrainConfig,
) -> Result<CorrectnessModel, TrainError> {
    if group.is_empty() {
        return Err(TrainError::EmptyInput);
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for domain in group {
        let mut found = false;
        for r in records.iter().filter(|r| &r.domain_id == domain) {
            found = true;
            let label = r.label.ok_or(TrainError::MissingLabels)?;
            rows.push(config.feature_subset.select(&r.features));
            labels.push(label);
        }
        if !found {
            return Err(TrainError::MissingDomain(domain.clone()));
        }
    }

    let scaler = fit_zscaler(&rows)?;
    let x = scaler.apply(&rows);
    let search = grid_search_cv(config.family, &x, &labels, config.balance, config.cv_folds, config.seed)?;

    let predictor = if config.calibrate {
        let family = config.family;
        let hp = search.best.clone();
        let balance = config.balance;
        let folds = cross_fit_calibrate(
            |tx, ty, fold_seed| train_at(family, &hp, tx, ty, balance, fold_seed),
            &x,
            &labels,
            config.cv_folds,
            config.seed,
        )?;
        Predictor::CrossFitted(
            folds.into_iter().map(|(base, map)| CalibratedFold { base, map }).collect(),
        )
    } else {
        let fit_seed = stable_hash(&[&config.seed.to_le_bytes(), b"final"]);
        Predictor::Single(train_at(config.family, &search.best, &x, &labels, config.balance, fit_seed)?)
    };

    Ok(CorrectnessModel {
        version: MODEL_VERSION,
        family: config.family,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        subset: config.feature_subset.clone(),
        scaler,
        predictor,
        meta: TrainMeta {
            group_domains: group.iter().cloned().collect(),
            seed: config.seed,
            balance: config.balance,
            calibrate: config.calibrate,
            chosen_hyperparams: search.best,
            cv_table: search.table,
            n_rows: labels.len(),
        },
    })
}
