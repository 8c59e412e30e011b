//! Exhaustive train/test composition sweep: subset enumeration, per-group
//! training and holdout evaluation, leave-one-out, and median/IQR aggregates.
//!
//! Rows are independent work items with per-row derived seeds, so parallel
//! and serial execution produce identical tables.

use crate::cache::{csv_escape, FeatureRecord};
use crate::classifier::{train_on_group, Family, TrainConfig};
use crate::estimate::{evaluate_holdout, DomainEstimate};
use crate::eval::spearman;
use crate::profile::{quantile, FeatureSubset};
use crate::rng::stable_hash;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SweepError {
    KOutOfRange { k: usize, n_domains: usize },
    EmptyCorpus,
    MissingDomain(String),
    UnlabeledDomain(String),
    DuplicateDomain(String),
    InvalidConfig(String),
    EmptyBucket,
}

impl fmt::Display for SweepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepError::KOutOfRange { k, n_domains } => {
                write!(f, "k={k} outside 1..={n_domains}")
            }
            SweepError::EmptyCorpus => write!(f, "corpus is empty"),
            SweepError::MissingDomain(d) => write!(f, "no records for domain \"{d}\""),
            SweepError::UnlabeledDomain(d) => write!(f, "domain \"{d}\" has unlabeled records"),
            SweepError::DuplicateDomain(d) => write!(f, "domain \"{d}\" listed twice"),
            SweepError::InvalidConfig(m) => write!(f, "invalid sweep config: {m}"),
            SweepError::EmptyBucket => write!(f, "nothing to aggregate"),
        }
    }
}

impl std::error::Error for SweepError {}

/// One classifier configuration of the 3 x 2 x 2 ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub family: Family,
    pub balance: bool,
    pub calibrate: bool,
}

impl EstimatorConfig {
    /// Stable identifier used in row seeds and CSV.
    pub fn id(&self) -> String {
        format!(
            "{}|balance={}|calibrate={}",
            self.family,
            u8::from(self.balance),
            u8::from(self.calibrate)
        )
    }
}

/// All 12 estimator configs in documented order: family-major, then balance,
/// then calibrate.
pub fn all_estimator_configs() -> Vec<EstimatorConfig> {
    let mut configs = Vec::with_capacity(12);
    for family in Family::ALL {
        for balance in [false, true] {
            for calibrate in [false, true] {
                configs.push(EstimatorConfig { family, balance, calibrate });
            }
        }
    }
    configs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Domain ids; deduplicated and sorted internally.
    pub domains: Vec<String>,
    pub k_values: Vec<usize>,
    pub estimator_configs: Vec<EstimatorConfig>,
    pub feature_subsets: Vec<FeatureSubset>,
    pub seed: u64,
    pub include_leave_one_out: bool,
    pub cv_folds: usize,
}

impl SweepConfig {
    pub fn new(domains: Vec<String>) -> Self {
        SweepConfig {
            domains,
            k_values: vec![1, 2, 3, 4],
            estimator_configs: all_estimator_configs(),
            feature_subsets: vec![FeatureSubset::full11()],
            seed: 42,
            include_leave_one_out: false,
            cv_folds: 5,
        }
    }

    fn validate(&self) -> Result<Vec<String>, SweepError> {
        let mut sorted = self.domains.clone();
        sorted.sort();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(SweepError::DuplicateDomain(w[0].clone()));
            }
        }
        if self.estimator_configs.is_empty() {
            return Err(SweepError::InvalidConfig("no estimator configs".into()));
        }
        if self.feature_subsets.is_empty() {
            return Err(SweepError::InvalidConfig("no feature subsets".into()));
        }
        for &k in &self.k_values {
            if k == 0 || k >= sorted.len() {
                return Err(SweepError::KOutOfRange { k, n_domains: sorted.len() });
            }
        }
        Ok(sorted)
    }
}

/// All C(n, k) subsets of the sorted domain list, in lexicographic order.
pub fn enumerate_groups(domains: &[String], k: usize) -> Result<Vec<Vec<String>>, SweepError> {
    let mut sorted = domains.to_vec();
    sorted.sort();
    let n = sorted.len();
    if k == 0 || k > n {
        return Err(SweepError::KOutOfRange { k, n_domains: n });
    }
    let mut groups = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        groups.push(idx.iter().map(|&i| sorted[i].clone()).collect());
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(groups);
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// '+'-joined sorted domain ids, the group key used everywhere.
pub fn group_label(group: &[String]) -> String {
    let mut sorted = group.to_vec();
    sorted.sort();
    sorted.join("+")
}

/// One sweep row. Failed rows carry the error message instead of metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub group: Vec<String>,
    pub k: usize,
    pub config: EstimatorConfig,
    pub subset: String,
    pub weighted_group_accuracy: Option<f64>,
    pub aee: Option<f64>,
    pub spearman: Option<f64>,
    pub estimates: Vec<DomainEstimate>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Leave-one-out study: one row per held-out domain (k = n-1), plus the rank
/// correlation across the n (estimate, truth) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaveOneOutResult {
    pub result: SweepResult,
    pub spearman: Option<f64>,
}

fn check_corpus(records: &[FeatureRecord], domains: &[String]) -> Result<(), SweepError> {
    if records.is_empty() {
        return Err(SweepError::EmptyCorpus);
    }
    for d in domains {
        let mut any = false;
        for r in records.iter().filter(|r| &r.domain_id == d) {
            any = true;
            if r.label.is_none() {
                return Err(SweepError::UnlabeledDomain(d.clone()));
            }
        }
        if !any {
            return Err(SweepError::MissingDomain(d.clone()));
        }
    }
    Ok(())
}

fn run_row(
    records: &[FeatureRecord],
    all_domains: &[String],
    group: &[String],
    config: &SweepConfig,
    estimator: EstimatorConfig,
    subset: &FeatureSubset,
) -> SweepRow {
    let label = group_label(group);
    let row_seed = stable_hash(&[
        &config.seed.to_le_bytes(),
        label.as_bytes(),
        estimator.id().as_bytes(),
        subset.name().as_bytes(),
    ]);
    let group_set: BTreeSet<String> = group.iter().cloned().collect();
    let holdout: BTreeSet<String> =
        all_domains.iter().filter(|d| !group_set.contains(*d)).cloned().collect();
    assert!(group_set.is_disjoint(&holdout), "group leaked into holdout");

    let train_config = TrainConfig {
        family: estimator.family,
        balance: estimator.balance,
        calibrate: estimator.calibrate,
        feature_subset: subset.clone(),
        seed: row_seed,
        cv_folds: config.cv_folds,
    };
    let outcome = train_on_group(records, &group_set, &train_config)
        .map_err(|e| e.to_string())
        .and_then(|model| {
            evaluate_holdout(&model, records, &holdout).map_err(|e| e.to_string())
        });
    match outcome {
        Ok(summary) => SweepRow {
            group: group.to_vec(),
            k: group.len(),
            config: estimator,
            subset: subset.name().to_string(),
            weighted_group_accuracy: summary.weighted_group_accuracy,
            aee: summary.aee,
            spearman: summary.spearman,
            estimates: summary.estimates,
            error: None,
        },
        Err(message) => SweepRow {
            group: group.to_vec(),
            k: group.len(),
            config: estimator,
            subset: subset.name().to_string(),
            weighted_group_accuracy: None,
            aee: None,
            spearman: None,
            estimates: Vec::new(),
            error: Some(message),
        },
    }
}

/// Runs the full composition sweep. Per-row failures become data, not crashes;
/// only an empty corpus or invalid config is fatal.
pub fn run_sweep(records: &[FeatureRecord], config: &SweepConfig) -> Result<SweepResult, SweepError> {
    let domains = config.validate()?;
    check_corpus(records, &domains)?;

    let mut specs: Vec<(Vec<String>, EstimatorConfig, FeatureSubset)> = Vec::new();
    for &k in &config.k_values {
        for group in enumerate_groups(&domains, k)? {
            for &estimator in &config.estimator_configs {
                for subset in &config.feature_subsets {
                    specs.push((group.clone(), estimator, subset.clone()));
                }
            }
        }
    }
    let rows: Vec<SweepRow> = specs
        .par_iter()
        .map(|(group, estimator, subset)| {
            run_row(records, &domains, group, config, *estimator, subset)
        })
        .collect();
    Ok(SweepResult { rows })
}

/// Appendix-style leave-one-out: k = n-1 via the identical row pipeline, then
/// Spearman across the per-row single-domain (estimate, truth) pairs.
pub fn leave_one_out(
    records: &[FeatureRecord],
    config: &SweepConfig,
) -> Result<LeaveOneOutResult, SweepError> {
    let domains = config.validate()?;
    if domains.len() < 2 {
        return Err(SweepError::KOutOfRange { k: domains.len(), n_domains: domains.len() });
    }
    let mut loo_config = config.clone();
    loo_config.k_values = vec![domains.len() - 1];
    let result = run_sweep(records, &loo_config)?;

    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for row in &result.rows {
        if let Some(est) = row.estimates.first() {
            if let Some(truth) = est.true_accuracy {
                pairs.push((est.estimated_accuracy, truth));
            }
        }
    }
    let rho = if pairs.len() >= 2 {
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        spearman(&xs, &ys).ok()
    } else {
        None
    };
    Ok(LeaveOneOutResult { result, spearman: rho })
}

/// Aggregation factor for ablation tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKey {
    K,
    Family,
    Balance,
    Calibrate,
}

impl AggregateKey {
    pub fn as_str(&self) -> &'static str {
        match self {
            AggregateKey::K => "k",
            AggregateKey::Family => "classifier",
            AggregateKey::Balance => "balance",
            AggregateKey::Calibrate => "calibration",
        }
    }

    fn bucket_of(&self, row: &SweepRow) -> String {
        match self {
            AggregateKey::K => row.k.to_string(),
            AggregateKey::Family => row.config.family.to_string(),
            AggregateKey::Balance => if row.config.balance { "on" } else { "off" }.to_string(),
            AggregateKey::Calibrate => if row.config.calibrate { "on" } else { "off" }.to_string(),
        }
    }
}

/// Median and IQR (Q75 - Q25, linear-interpolation quantiles) of AEE and
/// Spearman per bucket. Rows without a value (failures, n/a Spearman) are
/// excluded from that metric and counted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub factor: String,
    pub bucket: String,
    pub n_rows: usize,
    pub n_failed: usize,
    pub median_aee: Option<f64>,
    pub iqr_aee: Option<f64>,
    pub n_spearman: usize,
    pub median_spearman: Option<f64>,
    pub iqr_spearman: Option<f64>,
}

pub fn aggregate(result: &SweepResult, key: AggregateKey) -> Result<Vec<AggregateRow>, SweepError> {
    if result.rows.is_empty() {
        return Err(SweepError::EmptyBucket);
    }
    let mut buckets: Vec<String> = result.rows.iter().map(|r| key.bucket_of(r)).collect();
    buckets.sort();
    buckets.dedup();

    let mut out = Vec::with_capacity(buckets.len());
    for bucket in buckets {
        let rows: Vec<&SweepRow> =
            result.rows.iter().filter(|r| key.bucket_of(r) == bucket).collect();
        let aees: Vec<f64> = rows.iter().filter_map(|r| r.aee).collect();
        let rhos: Vec<f64> = rows.iter().filter_map(|r| r.spearman).collect();
        let stats = |v: &[f64]| -> (Option<f64>, Option<f64>) {
            if v.is_empty() {
                (None, None)
            } else {
                let med = quantile(v, 0.5).unwrap();
                let iqr = quantile(v, 0.75).unwrap() - quantile(v, 0.25).unwrap();
                (Some(med), Some(iqr))
            }
        };
        let (median_aee, iqr_aee) = stats(&aees);
        let (median_spearman, iqr_spearman) = stats(&rhos);
        out.push(AggregateRow {
            factor: key.as_str().to_string(),
            bucket,
            n_rows: rows.len(),
            n_failed: rows.iter().filter(|r| r.error.is_some()).count(),
            median_aee,
            iqr_aee,
            n_spearman: rhos.len(),
            median_spearman,
            iqr_spearman,
        });
    }
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Results CSV: one row per (group, estimator config, subset).
pub fn results_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "group,k,family,balance,calibrate,subset,weighted_group_accuracy,aee,spearman,n_holdout,error\n",
    );
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_escape(&group_label(&r.group)),
            r.k,
            r.config.family,
            u8::from(r.config.balance),
            u8::from(r.config.calibrate),
            csv_escape(&r.subset),
            opt(r.weighted_group_accuracy),
            opt(r.aee),
            opt(r.spearman),
            r.estimates.len(),
            csv_escape(r.error.as_deref().unwrap_or("")),
        ));
    }
    out
}

/// Long-format per-domain estimates for every successful row.
pub fn estimates_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "group,family,balance,calibrate,subset,domain_id,n,estimated_accuracy,true_accuracy,abs_error\n",
    );
    for r in &result.rows {
        for e in &r.estimates {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                csv_escape(&group_label(&r.group)),
                r.config.family,
                u8::from(r.config.balance),
                u8::from(r.config.calibrate),
                csv_escape(&r.subset),
                csv_escape(&e.domain_id),
                e.n_instances,
                e.estimated_accuracy,
                opt(e.true_accuracy),
                opt(e.abs_error()),
            ));
        }
    }
    out
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(
        "factor,bucket,n_rows,n_failed,median_aee,iqr_aee,n_spearman,median_spearman,iqr_spearman\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.factor,
            csv_escape(&r.bucket),
            r.n_rows,
            r.n_failed,
            opt(r.median_aee),
            opt(r.iqr_aee),
            r.n_spearman,
            opt(r.median_spearman),
            opt(r.iqr_spearman),
        ));
    }
    out
}

/// Plot-ready (weighted_group_accuracy, aee) pairs for the difficulty study.
pub fn difficulty_pairs_csv(result: &SweepResult) -> String {
    let mut out = String::from("group,k,family,balance,calibrate,weighted_group_accuracy,aee\n");
    for r in &result.rows {
        if let (Some(w), Some(a)) = (r.weighted_group_accuracy, r.aee) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_escape(&group_label(&r.group)),
                r.k,
                r.config.family,
                u8::from(r.config.balance),
                u8::from(r.config.calibrate),
                w,
                a,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn domains(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    #[test]
    fn binomial_counts() {
        let d = domains(10);
        assert_eq!(enumerate_groups(&d, 1).unwrap().len(), 10);
        assert_eq!(enumerate_groups(&d, 2).unwrap().len(), 45);
        assert_eq!(enumerate_groups(&d, 3).unwrap().len(), 120);
        assert_eq!(enumerate_groups(&d, 4).unwrap().len(), 210);
        assert_eq!(enumerate_groups(&domains(3), 3).unwrap().len(), 1);
    }

    #[test]
    fn lexicographic_order_of_sorted_ids() {
        let d = vec!["b".to_string(), "a".to_string(), "c".to_string()];
        let groups = enumerate_groups(&d, 2).unwrap();
        assert_eq!(
            groups,
            vec![
                vec!["a".to_string(), "b".to_string()],
                vec!["a".to_string(), "c".to_string()],
                vec!["b".to_string(), "c".to_string()],
            ]
        );
    }

    #[test]
    fn k_out_of_range() {
        assert!(matches!(
            enumerate_groups(&domains(3), 0),
            Err(SweepError::KOutOfRange { .. })
        ));
        assert!(matches!(
            enumerate_groups(&domains(3), 4),
            Err(SweepError::KOutOfRange { .. })
        ));
    }

    #[test]
    fn estimator_config_count_and_order() {
        let configs = all_estimator_configs();
        assert_eq!(configs.len(), 12);
        assert_eq!(
            configs[0],
            EstimatorConfig { family: Family::LogRegL1, balance: false, calibrate: false }
        );
        assert_eq!(
            configs[11],
            EstimatorConfig { family: Family::Mlp, balance: true, calibrate: true }
        );
        let ids: BTreeSet<String> = configs.iter().map(|c| c.id()).collect();
        assert_eq!(ids.len(), 12);
    }

    fn tiny_corpus(n_domains: usize, per_domain: usize) -> Vec<FeatureRecord> {
        let mut records = Vec::new();
        for d in 0..n_domains {
            let acc = 0.2 + 0.6 * d as f64 / (n_domains - 1).max(1) as f64;
            for i in 0..per_domain {
                let label = ((i * 61 + d * 17) % 100) as f64 / 100.0 < acc;
                let h = if label { 0.6 } else { 1.6 } + ((i * 37 % 19) as f64 / 19.0 - 0.5) * 0.3;
                let mut features = [0.0; 11];
                features[0] = h + 0.2;
                features[1] = h;
                features[10] = h * 15.0;
                records.push(FeatureRecord {
                    instance_id: format!("d{d}-{i}"),
                    domain_id: format!("d{d}"),
                    label: Some(label),
                    features,
                    baselines: BTreeMap::new(),
                });
            }
        }
        records
    }

    fn fast_config(domains: Vec<String>) -> SweepConfig {
        let mut config = SweepConfig::new(domains);
        config.k_values = vec![1];
        config.estimator_configs = vec![EstimatorConfig {
            family: Family::LogRegL1,
            balance: false,
            calibrate: false,
        }];
        config
    }

    #[test]
    fn sweep_shape_and_determinism() {
        let records = tiny_corpus(4, 40);
        let config = fast_config(domains(4));
        let a = run_sweep(&records, &config).unwrap();
        assert_eq!(a.rows.len(), 4);
        for row in &a.rows {
            assert_eq!(row.estimates.len(), 3);
            assert!(row.error.is_none(), "{:?}", row.error);
            // holdout disjoint from the group
            for e in &row.estimates {
                assert!(!row.group.contains(&e.domain_id));
            }
        }
        let b = run_sweep(&records, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(results_csv(&a), results_csv(&b));
    }

    #[test]
    fn weighted_group_accuracy_matches_independent_pass(){
        let records = tiny_corpus(4, 40);
        let config = fast_config(domains(4));
        let result = run_sweep(&records, &config).unwrap();
        for row in &result.rows {
            let mut num = 0.0;
            let mut den = 0.0;
            for d in &row.group {
                let recs: Vec<&FeatureRecord> =
                    records.iter().filter(|r| &r.domain_id == d).collect();
                let acc = recs.iter().filter(|r| r.label.unwrap()).count() as f64
                    / recs.len() as f64;
                num += recs.len() as f64 * acc;
                den += recs.len() as f64;
            }
            assert!((row.weighted_group_accuracy.unwrap() - num / den).abs() < 1e-12);
        }
    }

    #[test]
    fn unlabeled_domain_is_fatal() {
        let mut records = tiny_corpus(3, 40);
        records[5].label = None;
        let config = fast_config(domains(3));
        assert!(matches!(
            run_sweep(&records, &config),
            Err(SweepError::UnlabeledDomain(_))
        ));
    }

    #[test]
    fn single_class_group_is_row_level_failure() {
        let mut records = tiny_corpus(3, 40);
        for r in records.iter_mut().filter(|r| r.domain_id == "d0") {
            r.label = Some(true);
        }
        let config = fast_config(domains(3));
        let result = run_sweep(&records, &config).unwrap();
        let failed: Vec<&SweepRow> = result.rows.iter().filter(|r| r.error.is_some()).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].group, vec!["d0".to_string()]);
    }

    #[test]
    fn loo_matches_run_sweep_at_k_n_minus_1() {
        let records = tiny_corpus(4, 40);
        let mut config = fast_config(domains(4));
        config.k_values = vec![3];
        let direct = run_sweep(&records, &config).unwrap();
        let loo = leave_one_out(&records, &config).unwrap();
        assert_eq!(direct, loo.result);
        assert!(loo.spearman.is_some());
    }

    #[test]
    fn feature_subsets_multiply_rows() {
        use crate::profile::FeatureSubset;
        let records = tiny_corpus(3, 40);
        let mut config = fast_config(domains(3));
        config.feature_subsets = vec![FeatureSubset::full11(), FeatureSubset::top2()];
        let result = run_sweep(&records, &config).unwrap();
        assert_eq!(result.rows.len(), 3 * 2); // C(3,1) groups x 1 config x 2 subsets
        assert_eq!(result.rows.iter().filter(|r| r.subset == "top2").count(), 3);
        assert!(result.rows.iter().all(|r| r.error.is_none()));
    }

    #[test]
    fn aggregate_partitions_rows() {
        let records = tiny_corpus(4, 40);
        let mut config = fast_config(domains(4));
        config.estimator_configs = vec![
            EstimatorConfig { family: Family::LogRegL1, balance: false, calibrate: false },
            EstimatorConfig { family: Family::LogRegL1, balance: false, calibrate: true },
        ];
        let result = run_sweep(&records, &config).unwrap();
        let agg = aggregate(&result, AggregateKey::Calibrate).unwrap();
        assert_eq!(agg.len(), 2);
        assert_eq!(agg.iter().map(|a| a.n_rows).sum::<usize>(), result.rows.len());
        assert_eq!(agg[0].bucket, "off");
        assert_eq!(agg[1].bucket, "on");
    }

    #[test]
    fn aggregate_median_and_iqr() {
        let mut result = SweepResult { rows: Vec::new() };
        for (i, aee) in [0.1, 0.2, 0.3].iter().enumerate() {
            result.rows.push(SweepRow {
                group: vec![format!("g{i}")],
                k: 1,
                config: all_estimator_configs()[0],
                subset: "full11".into(),
                weighted_group_accuracy: Some(0.5),
                aee: Some(*aee),
                spearman: None,
                estimates: vec![],
                error: None,
            });
        }
        let agg = aggregate(&result, AggregateKey::K).unwrap();
        assert_eq!(agg.len(), 1);
        assert!((agg[0].median_aee.unwrap() - 0.2).abs() < 1e-12);
        assert!((agg[0].iqr_aee.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(agg[0].n_spearman, 0);
        assert_eq!(agg[0].median_spearman, None);

        let single = SweepResult { rows: result.rows[..1].to_vec() };
        let agg = aggregate(&single, AggregateKey::K).unwrap();
        assert_eq!(agg[0].median_aee, Some(0.1));
        assert_eq!(agg[0].iqr_aee, Some(0.0));
    }

    #[test]
    fn empty_aggregate_is_error() {
        let empty = SweepResult { rows: vec![] };
        assert_eq!(aggregate(&empty, AggregateKey::K).unwrap_err(), SweepError::EmptyBucket);
    }

    #[test]
    fn duplicate_domains_rejected() {
        let config = fast_config(vec!["a".into(), "a".into(), "b".into()]);
        assert!(matches!(
            run_sweep(&tiny_corpus(2, 10), &config),
            Err(SweepError::DuplicateDomain(_))
        ));
    }
}
