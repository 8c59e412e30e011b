//! Domain-level accuracy estimation: averaging per-instance correctness
//! probabilities over a domain, and scoring a trained model on a held-out
//! domain set (AEE and Spearman rank agreement).

use crate::cache::FeatureRecord;
use crate::classifier::{CorrectnessModel, TrainError};
use crate::eval::{aee, spearman, EvalError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum EstimationError {
    EmptyDomain,
    ProbOutOfRange { value: f64 },
    /// Training group intersects the holdout set.
    DomainOverlap { domains: Vec<String> },
    EmptyHoldout,
    MissingDomain(String),
    Predict(TrainError),
}

impl fmt::Display for EstimationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimationError::EmptyDomain => write!(f, "domain has no instances"),
            EstimationError::ProbOutOfRange { value } => {
                write!(f, "probability {value} outside [0, 1]")
            }
            EstimationError::DomainOverlap { domains } => {
                write!(f, "training group overlaps holdout: {}", domains.join(", "))
            }
            EstimationError::EmptyHoldout => write!(f, "holdout set is empty"),
            EstimationError::MissingDomain(d) => write!(f, "no records for domain \"{d}\""),
            EstimationError::Predict(e) => write!(f, "prediction failed: {e}"),
        }
    }
}

impl std::error::Error for EstimationError {}

/// One domain's estimate: mean predicted correctness probability, with the
/// labeled true accuracy when available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainEstimate {
    pub domain_id: String,
    pub n_instances: usize,
    pub estimated_accuracy: f64,
    pub true_accuracy: Option<f64>,
}

impl DomainEstimate {
    pub fn abs_error(&self) -> Option<f64> {
        self.true_accuracy.map(|t| (self.estimated_accuracy - t).abs())
    }
}

/// Holdout evaluation of one training group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    /// '+'-joined sorted training-domain ids.
    pub group_id: String,
    /// Instance-count-weighted mean of true accuracies across training
    /// domains; None when the training-domain records are not in `records`
    /// (estimation-only runs see just the holdout).
    pub weighted_group_accuracy: Option<f64>,
    pub estimates: Vec<DomainEstimate>,
    /// Mean |estimate - truth| over labeled holdout domains; None when no
    /// holdout labels exist (estimation-only mode).
    pub aee: Option<f64>,
    /// Rank agreement over labeled holdout domains; None when fewer than two
    /// labeled domains exist or either vector is constant.
    pub spearman: Option<f64>,
}

/// Eq-style aggregation: the arithmetic mean of per-instance probabilities.
pub fn estimate_domain(probs: &[f64]) -> Result<f64, EstimationError> {
    if probs.is_empty() {
        return Err(EstimationError::EmptyDomain);
    }
    if let Some(&bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(EstimationError::ProbOutOfRange { value: bad });
    }
    Ok(probs.iter().sum::<f64>() / probs.len() as f64)
}

/// Labeled accuracy of a slice of records: mean label over labeled instances,
/// None if none are labeled.
fn labeled_accuracy(records: &[&FeatureRecord]) -> Option<f64> {
    let labeled: Vec<bool> = records.iter().filter_map(|r| r.label).collect();
    if labeled.is_empty() {
        None
    } else {
        Some(labeled.iter().filter(|&&l| l).count() as f64 / labeled.len() as f64)
    }
}

/// Evaluates a trained model on held-out domains. The holdout must be disjoint
/// from the model's training group; unlabeled holdout domains are estimated
/// but excluded from AEE and Spearman.
pub fn evaluate_holdout(
    model: &CorrectnessModel,
    records: &[FeatureRecord],
    holdout: &BTreeSet<String>,
) -> Result<GroupSummary, EstimationError> {
    if holdout.is_empty() {
        return Err(EstimationError::EmptyHoldout);
    }
    let group: BTreeSet<String> = model.meta.group_domains.iter().cloned().collect();
    let overlap: Vec<String> = group.intersection(holdout).cloned().collect();
    if !overlap.is_empty() {
        return Err(EstimationError::DomainOverlap { domains: overlap });
    }

    let mut by_domain: BTreeMap<&str, Vec<&FeatureRecord>> = BTreeMap::new();
    for r in records {
        by_domain.entry(&r.domain_id).or_default().push(r);
    }

    // weighted group accuracy over the training domains, when they are present
    let mut acc_weighted = 0.0;
    let mut n_total = 0.0;
    let mut group_complete = true;
    for d in &group {
        match by_domain.get(d.as_str()).and_then(|recs| {
            labeled_accuracy(recs).map(|acc| (recs.len() as f64, acc))
        }) {
            Some((n, acc)) => {
                acc_weighted += n * acc;
                n_total += n;
            }
            None => {
                group_complete = false;
                break;
            }
        }
    }
    let weighted_group_accuracy =
        if group_complete { Some(acc_weighted / n_total) } else { None };

    let mut estimates = Vec::with_capacity(holdout.len());
    for d in holdout {
        let recs = by_domain
            .get(d.as_str())
            .ok_or_else(|| EstimationError::MissingDomain(d.clone()))?;
        let owned: Vec<FeatureRecord> = recs.iter().map(|&r| r.clone()).collect();
        let probs = model.predict_records(&owned).map_err(EstimationError::Predict)?;
        estimates.push(DomainEstimate {
            domain_id: d.clone(),
            n_instances: recs.len(),
            estimated_accuracy: estimate_domain(&probs)?,
            true_accuracy: labeled_accuracy(recs),
        });
    }

    let est_map: BTreeMap<String, f64> = estimates
        .iter()
        .filter(|e| e.true_accuracy.is_some())
        .map(|e| (e.domain_id.clone(), e.estimated_accuracy))
        .collect();
    let truth_map: BTreeMap<String, f64> = estimates
        .iter()
        .filter_map(|e| e.true_accuracy.map(|t| (e.domain_id.clone(), t)))
        .collect();
    let group_aee = aee(&est_map, &truth_map).ok();
    let rho = if truth_map.len() >= 2 {
        let xs: Vec<f64> = est_map.values().copied().collect();
        let ys: Vec<f64> = truth_map.values().copied().collect();
        match spearman(&xs, &ys) {
            Ok(v) => Some(v),
            Err(EvalError::DegenerateInput) => None,
            Err(_) => None,
        }
    } else {
        None
    };

    Ok(GroupSummary {
        group_id: model.meta.group_id(),
        weighted_group_accuracy,
        estimates,
        aee: group_aee,
        spearman: rho,
    })
}

/// Estimation report CSV: domain_id, n, estimated_accuracy, true_accuracy
/// (blank when unlabeled), abs_error.
pub fn estimates_csv(estimates: &[DomainEstimate]) -> String {
    let mut out = String::from("domain_id,n,estimated_accuracy,true_accuracy,abs_error\n");
    for e in estimates {
        out.push_str(&crate::cache::csv_escape(&e.domain_id));
        out.push_str(&format!(",{},{}", e.n_instances, e.estimated_accuracy));
        match e.true_accuracy {
            Some(t) => out.push_str(&format!(",{t},{}", e.abs_error().unwrap())),
            None => out.push_str(",,"),
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{
        fit_zscaler, Family, HyperParams, LogRegParams, ModelParams, Predictor, TrainMeta,
        MODEL_VERSION,
    };
    use crate::profile::{FeatureSubset, FEATURE_NAMES};

    #[test]
    fn estimate_domain_examples() {
        assert_eq!(estimate_domain(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!((estimate_domain(&[0.2, 0.4, 0.9]).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(estimate_domain(&[]).unwrap_err(), EstimationError::EmptyDomain);
        assert!(matches!(
            estimate_domain(&[0.5, 1.2]).unwrap_err(),
            EstimationError::ProbOutOfRange { .. }
        ));
    }

    fn record(domain: &str, i: usize, label: Option<bool>, h: f64) -> FeatureRecord {
        let mut features = [0.0; 11];
        features[1] = h;
        FeatureRecord {
            instance_id: format!("{domain}-{i}"),
            domain_id: domain.to_string(),
            label,
            features,
            baselines: Default::default(),
        }
    }

    /// Model predicting a constant probability regardless of features.
    fn constant_model(p: f64, group: &[&str]) -> CorrectnessModel {
        let logit = (p / (1.0 - p)).ln();
        CorrectnessModel {
            version: MODEL_VERSION,
            family: Family::LogRegL1,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            subset: FeatureSubset::full11(),
            scaler: fit_zscaler(&[vec![0.0; 11], vec![1.0; 11]]).unwrap(),
            predictor: Predictor::Single(ModelParams::LogReg(LogRegParams {
                weights: vec![0.0; 11],
                intercept: logit,
                converged: true,
                iterations: 0,
                final_tol: 0.0,
            })),
            meta: TrainMeta {
                group_domains: group.iter().map(|s| s.to_string()).collect(),
                seed: 0,
                balance: false,
                calibrate: false,
                chosen_hyperparams: HyperParams::LogReg { c: 1.0 },
                cv_table: vec![],
                n_rows: 2,
            },
        }
    }

    fn corpus() -> Vec<FeatureRecord> {
        let mut records = Vec::new();
        // training domain "t": accuracy 0.5
        for i in 0..10 {
            records.push(record("t", i, Some(i % 2 == 0), 0.5));
        }
        // holdout "a": accuracy 0.4; "b": accuracy 0.6
        for i in 0..10 {
            records.push(record("a", i, Some(i < 4), 1.0));
            records.push(record("b", i, Some(i < 6), 1.0));
        }
        records
    }

    #[test]
    fn constant_half_model_on_forty_sixty_domains() {
        let model = constant_model(0.5, &["t"]);
        let holdout: BTreeSet<String> = ["a".to_string(), "b".to_string()].into();
        let summary = evaluate_holdout(&model, &corpus(), &holdout).unwrap();
        assert!((summary.aee.unwrap() - 0.10).abs() < 1e-9);
        assert_eq!(summary.spearman, None); // constant estimates are degenerate
        assert!((summary.weighted_group_accuracy.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(summary.group_id, "t");
    }

    #[test]
    fn overlap_is_refused() {
        let model = constant_model(0.5, &["a"]);
        let holdout: BTreeSet<String> = ["a".to_string(), "b".to_string()].into();
        let err = evaluate_holdout(&model, &corpus(), &holdout).unwrap_err();
        assert!(matches!(err, EstimationError::DomainOverlap { domains } if domains == ["a"]));
    }

    #[test]
    fn empty_holdout_is_refused() {
        let model = constant_model(0.5, &["t"]);
        let err = evaluate_holdout(&model, &corpus(), &BTreeSet::new()).unwrap_err();
        assert_eq!(err, EstimationError::EmptyHoldout);
    }

    #[test]
    fn unlabeled_holdout_is_estimation_only() {
        let mut records = corpus();
        for i in 0..10 {
            records.push(record("u", i, None, 1.0));
        }
        let model = constant_model(0.5, &["t"]);
        let holdout: BTreeSet<String> = ["u".to_string()].into();
        let summary = evaluate_holdout(&model, &records, &holdout).unwrap();
        assert_eq!(summary.aee, None);
        assert_eq!(summary.spearman, None);
        assert_eq!(summary.estimates[0].true_accuracy, None);
        assert!((summary.estimates[0].estimated_accuracy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn calibrated_probabilities_estimate_accuracy() {
        // Bernoulli(p) labels with the probabilities themselves as the
        // estimate: |mean(p) - mean(z)| concentrates like a binomial mean
        let check = |n: usize, bound: f64, seed: u64| {
            let mut rng = crate::rng::derive_rng(seed, &[b"calib"]);
            use rand::Rng;
            let probs: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
            let labels: Vec<bool> = probs.iter().map(|&p| rng.gen::<f64>() < p).collect();
            let estimated = estimate_domain(&probs).unwrap();
            let actual = labels.iter().filter(|&&l| l).count() as f64 / n as f64;
            assert!((estimated - actual).abs() <= bound, "n={n}: {estimated} vs {actual}");
        };
        // 2 * stderr of a Bernoulli mean at p ~ 0.5
        check(500, 2.0 * (0.25f64 / 500.0).sqrt(), 7);
        check(10_000, 0.01, 8);
    }

    #[test]
    fn oracle_model_scores_perfectly() {
        // probabilities equal to labels: AEE 0, Spearman 1
        let mut records = Vec::new();
        for i in 0..10 {
            records.push(record("t", i, Some(i % 2 == 0), if i % 2 == 0 { 10.0 } else { -10.0 }));
        }
        for (d, acc_n) in [("a", 3), ("b", 7)] {
            for i in 0..10 {
                let label = i < acc_n;
                records.push(record(d, i, Some(label), if label { 10.0 } else { -10.0 }));
            }
        }
        // steep logit on h_mean saturates to the label
        let mut model = constant_model(0.5, &["t"]);
        if let Predictor::Single(ModelParams::LogReg(p)) = &mut model.predictor {
            p.weights[1] = 50.0;
            p.intercept = 0.0;
        }
        // scaler is identity-like: mean 0, std 1 on the h_mean column
        let holdout: BTreeSet<String> = ["a".to_string(), "b".to_string()].into();
        let summary = evaluate_holdout(&model, &records, &holdout).unwrap();
        assert!(summary.aee.unwrap() < 1e-9, "aee {:?}", summary.aee);
        assert_eq!(summary.spearman, Some(1.0));
    }

    #[test]
    fn shard_merge_invariance() {
        // mean over a domain equals the size-weighted mean over shards
        let probs: Vec<f64> = (0..17).map(|i| (i as f64) / 16.0).collect();
        let whole = estimate_domain(&probs).unwrap();
        let (s1, s2) = probs.split_at(5);
        let merged = (estimate_domain(s1).unwrap() * s1.len() as f64
            + estimate_domain(s2).unwrap() * s2.len() as f64)
            / probs.len() as f64;
        assert!((whole - merged).abs() < 1e-12);
    }

    #[test]
    fn csv_shape() {
        let estimates = vec![
            DomainEstimate {
                domain_id: "a".into(),
                n_instances: 10,
                estimated_accuracy: 0.5,
                true_accuracy: Some(0.4),
            },
            DomainEstimate {
                domain_id: "u".into(),
                n_instances: 3,
                estimated_accuracy: 0.25,
                true_accuracy: None,
            },
        ];
        let csv = estimates_csv(&estimates);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "domain_id,n,estimated_accuracy,true_accuracy,abs_error");
        assert!(lines[1].starts_with("a,10,0.5,0.4,"));
        assert_eq!(lines[2], "u,3,0.25,,");
    }
}
