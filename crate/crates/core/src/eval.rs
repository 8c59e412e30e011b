//! Evaluation statistics: rank-based AUROC, Spearman rank correlation,
//! accuracy-estimation error, and the per-domain diagnostic table.
//!
//! AUROC is reported in the "probability a random incorrect response outranks
//! a random correct one" convention: metrics whose LOW values signal errors
//! are flipped before ranking, which reproduces the 1-AUROC reporting for
//! skewness, kurtosis, LNTP and MTP.

use crate::baselines::{metric_orientation, Orientation, BASELINE_NAMES};
use crate::cache::{csv_escape, FeatureRecord};
use crate::profile::FEATURE_NAMES;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// AUROC needs at least one positive and one negative label.
    SingleClass,
    /// Spearman needs length >= 2 and non-constant inputs.
    DegenerateInput,
    /// AEE needs the same domain set on both sides.
    DomainMismatch { missing: String },
    LengthMismatch { left: usize, right: usize },
    Empty,
    /// diagnose needs labels on every record.
    MissingLabels,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::SingleClass => write!(f, "both classes required"),
            EvalError::DegenerateInput => write!(f, "degenerate input (constant or too short)"),
            EvalError::DomainMismatch { missing } => {
                write!(f, "domain sets differ (missing \"{missing}\")")
            }
            EvalError::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            EvalError::Empty => write!(f, "empty input"),
            EvalError::MissingLabels => write!(f, "labels required"),
        }
    }
}

impl std::error::Error for EvalError {}

/// Scores paired with incorrectness labels (`true` = the response was wrong)
/// and the score's orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredLabels {
    scores: Vec<f64>,
    incorrect: Vec<bool>,
    orientation: Orientation,
}

impl ScoredLabels {
    pub fn new(
        scores: Vec<f64>,
        incorrect: Vec<bool>,
        orientation: Orientation,
    ) -> Result<Self, EvalError> {
        if scores.len() != incorrect.len() {
            return Err(EvalError::LengthMismatch { left: scores.len(), right: incorrect.len() });
        }
        if scores.is_empty() {
            return Err(EvalError::Empty);
        }
        Ok(ScoredLabels { scores, incorrect, orientation })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn incorrect(&self) -> &[bool] {
        &self.incorrect
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }
}

/// Average ranks (1-based), ties share the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Rank-based (Mann-Whitney) AUROC of the score for predicting the incorrect
/// class, after orientation normalization. Ties earn 0.5 credit.
pub fn auroc(scored: &ScoredLabels) -> Result<f64, EvalError> {
    let n_inc = scored.incorrect.iter().filter(|&&x| x).count();
    let n_cor = scored.incorrect.len() - n_inc;
    if n_inc == 0 || n_cor == 0 {
        return Err(EvalError::SingleClass);
    }
    let oriented: Vec<f64> = match scored.orientation {
        Orientation::HigherMeansIncorrect => scored.scores.clone(),
        Orientation::LowerMeansIncorrect => scored.scores.iter().map(|s| -s).collect(),
    };
    let ranks = average_ranks(&oriented);
    let rank_sum: f64 = ranks
        .iter()
        .zip(&scored.incorrect)
        .filter(|(_, &inc)| inc)
        .map(|(&r, _)| r)
        .sum();
    let u = rank_sum - (n_inc * (n_inc + 1)) as f64 / 2.0;
    Ok(u / (n_inc as f64 * n_cor as f64))
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(EvalError::DegenerateInput);
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    pearson(&rx, &ry)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::DegenerateInput);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Accuracy estimation error: mean absolute difference between estimated and
/// true per-domain accuracies, over an aligned domain set.
pub fn aee(
    estimates: &BTreeMap<String, f64>,
    truths: &BTreeMap<String, f64>,
) -> Result<f64, EvalError> {
    if estimates.is_empty() || truths.is_empty() {
        return Err(EvalError::Empty);
    }
    for k in truths.keys() {
        if !estimates.contains_key(k) {
            return Err(EvalError::DomainMismatch { missing: k.clone() });
        }
    }
    for k in estimates.keys() {
        if !truths.contains_key(k) {
            return Err(EvalError::DomainMismatch { missing: k.clone() });
        }
    }
    let total: f64 = estimates.iter().map(|(k, &e)| (e - truths[k]).abs()).sum();
    Ok(total / estimates.len() as f64)
}

/// One statistic's per-domain AUROC cells; `None` marks a single-class domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisRow {
    pub statistic: String,
    pub orientation: Orientation,
    pub cells: Vec<Option<f64>>,
}

/// The Table-1-shaped diagnostic: statistics x domains.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosisTable {
    pub domains: Vec<String>,
    pub rows: Vec<DiagnosisRow>,
}

impl DiagnosisTable {
    pub fn cell(&self, statistic: &str, domain: &str) -> Option<f64> {
        let col = self.domains.iter().position(|d| d == domain)?;
        let row = self.rows.iter().find(|r| r.statistic == statistic)?;
        row.cells[col]
    }

    /// CSV: one row per statistic, orientation column, then one column per domain.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("statistic,orientation");
        for d in &self.domains {
            out.push(',');
            out.push_str(&csv_escape(d));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&csv_escape(&row.statistic));
            out.push(',');
            out.push_str(row.orientation.as_str());
            for cell in &row.cells {
                out.push(',');
                match cell {
                    Some(v) => out.push_str(&v.to_string()),
                    None => out.push_str("n/a"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Per-domain AUROC of each of the 11 profile statistics and 9 baselines,
/// orientation applied. Domains where only one class is present yield
/// missing cells rather than failing the whole table.
pub fn diagnose(records: &[FeatureRecord]) -> Result<DiagnosisTable, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    if records.iter().any(|r| r.label.is_none()) {
        return Err(EvalError::MissingLabels);
    }
    let mut by_domain: BTreeMap<&str, Vec<&FeatureRecord>> = BTreeMap::new();
    for r in records {
        by_domain.entry(&r.domain_id).or_default().push(r);
    }
    let domains: Vec<String> = by_domain.keys().map(|s| s.to_string()).collect();

    let mut rows = Vec::with_capacity(FEATURE_NAMES.len() + BASELINE_NAMES.len());
    let stat_names = FEATURE_NAMES.iter().chain(BASELINE_NAMES.iter());
    for (stat_idx, &name) in stat_names.enumerate() {
        let orientation = metric_orientation(name).expect("known statistic");
        let mut cells = Vec::with_capacity(domains.len());
        for recs in by_domain.values() {
            let scores: Vec<f64> = recs
                .iter()
                .map(|r| {
                    if stat_idx < FEATURE_NAMES.len() {
                        r.features[stat_idx]
                    } else {
                        r.baselines[BASELINE_NAMES[stat_idx - FEATURE_NAMES.len()]]
                    }
                })
                .collect();
            let incorrect: Vec<bool> = recs.iter().map(|r| !r.label.unwrap()).collect();
            let cell = ScoredLabels::new(scores, incorrect, orientation)
                .and_then(|s| auroc(&s))
                .ok();
            cells.push(cell);
        }
        rows.push(DiagnosisRow { statistic: name.to_string(), orientation, cells });
    }
    Ok(DiagnosisTable { domains, rows })
}
