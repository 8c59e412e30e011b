//! Entropy-profile features: the eleven-statistic summary of one entropy
//! trajectory, plus named reduced feature subsets.
//!
//! Conventions (fixed for reproducibility):
//! - quantiles interpolate linearly at rank position (n-1)*q
//! - std is the population standard deviation (divide by T)
//! - skewness is the biased Fisher-Pearson g1 = m3 / m2^(3/2)
//! - kurtosis is excess: g2 = m4 / m2^2 - 3
//! - degenerate shapes (m2 at float noise floor, or T < 3 for skew,
//!   T < 4 for kurt) are defined as 0, never NaN

use crate::trace::EntropyTrajectory;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Canonical feature order; persisted in model files so stored weights are
/// unambiguous.
pub const FEATURE_NAMES: [&str; 11] = [
    "h_max", "h_mean", "h_std", "h_q10", "h_q25", "h_q50", "h_q75", "h_q90", "h_skew", "h_kurt",
    "h_sea",
];

/// Variance below this is float noise from a constant trajectory.
const DEGENERATE_M2: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureError {
    EmptyTrajectory,
    EmptyInput,
    QOutOfRange { q: f64 },
    EmptySubset,
    IndexOutOfRange { index: usize },
    DuplicateIndex { index: usize },
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::EmptyTrajectory => write!(f, "trajectory is empty"),
            FeatureError::EmptyInput => write!(f, "input is empty"),
            FeatureError::QOutOfRange { q } => write!(f, "quantile {q} outside [0, 1]"),
            FeatureError::EmptySubset => write!(f, "feature subset is empty"),
            FeatureError::IndexOutOfRange { index } => {
                write!(f, "feature index {index} outside 0..11")
            }
            FeatureError::DuplicateIndex { index } => {
                write!(f, "feature index {index} repeated in subset")
            }
        }
    }
}

impl std::error::Error for FeatureError {}

/// The 11-dimensional entropy-profile vector, ordered as [`FEATURE_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub h_max: f64,
    pub h_mean: f64,
    pub h_std: f64,
    pub h_q10: f64,
    pub h_q25: f64,
    pub h_q50: f64,
    pub h_q75: f64,
    pub h_q90: f64,
    pub h_skew: f64,
    pub h_kurt: f64,
    pub h_sea: f64,
}

impl EntropyProfile {
    pub fn to_array(&self) -> [f64; 11] {
        [
            self.h_max, self.h_mean, self.h_std, self.h_q10, self.h_q25, self.h_q50, self.h_q75,
            self.h_q90, self.h_skew, self.h_kurt, self.h_sea,
        ]
    }

    pub fn from_array(a: [f64; 11]) -> Self {
        EntropyProfile {
            h_max: a[0],
            h_mean: a[1],
            h_std: a[2],
            h_q10: a[3],
            h_q25: a[4],
            h_q50: a[5],
            h_q75: a[6],
            h_q90: a[7],
            h_skew: a[8],
            h_kurt: a[9],
            h_sea: a[10],
        }
    }
}

/// Linear-interpolation quantile at rank position (n-1)*q over a sorted copy.
pub fn quantile(values: &[f64], q: f64) -> Result<f64, FeatureError> {
    if values.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(FeatureError::QOutOfRange { q });
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(quantile_sorted(&sorted, q))
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Summarizes a validated entropy trajectory (T >= 1 by construction).
pub fn summarize(trajectory: &EntropyTrajectory) -> EntropyProfile {
    summarize_values(trajectory.values()).expect("trajectory is non-empty")
}

/// Summarizes raw values; errors on an empty slice.
pub fn summarize_values(values: &[f64]) -> Result<EntropyProfile, FeatureError> {
    if values.is_empty() {
        return Err(FeatureError::EmptyTrajectory);
    }
    let n = values.len() as f64;
    let sea: f64 = values.iter().sum();
    let mean = sea / n;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let degenerate = m2 <= DEGENERATE_M2;
    let skew = if degenerate || values.len() < 3 { 0.0 } else { m3 / m2.powf(1.5) };
    let kurt = if degenerate || values.len() < 4 { 0.0 } else { m4 / (m2 * m2) - 3.0 };

    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));

    Ok(EntropyProfile {
        h_max: max,
        h_mean: mean,
        h_std: m2.sqrt(),
        h_q10: quantile_sorted(&sorted, 0.10),
        h_q25: quantile_sorted(&sorted, 0.25),
        h_q50: quantile_sorted(&sorted, 0.50),
        h_q75: quantile_sorted(&sorted, 0.75),
        h_q90: quantile_sorted(&sorted, 0.90),
        h_skew: skew,
        h_kurt: kurt,
        h_sea: sea,
    })
}

/// A named selection of profile features, by index into [`FEATURE_NAMES`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSubset {
    name: String,
    indices: Vec<usize>,
}

impl FeatureSubset {
    pub fn new(name: &str, mut indices: Vec<usize>) -> Result<Self, FeatureError> {
        if indices.is_empty() {
            return Err(FeatureError::EmptySubset);
        }
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(FeatureError::DuplicateIndex { index: w[0] });
            }
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= FEATURE_NAMES.len()) {
            return Err(FeatureError::IndexOutOfRange { index: bad });
        }
        Ok(FeatureSubset { name: name.to_string(), indices })
    }

    pub fn full11() -> Self {
        FeatureSubset::new("full11", (0..11).collect()).unwrap()
    }

    pub fn max_only() -> Self {
        FeatureSubset::new("max_only", vec![0]).unwrap()
    }

    pub fn sea_only() -> Self {
        FeatureSubset::new("sea_only", vec![10]).unwrap()
    }

    pub fn top2() -> Self {
        FeatureSubset::new("top2", vec![0, 10]).unwrap()
    }

    pub fn baselines3() -> Self {
        FeatureSubset::new("baselines3", vec![0, 1, 10]).unwrap()
    }

    /// Looks up one of the named reduced sets.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "full11" => Some(Self::full11()),
            "max_only" => Some(Self::max_only()),
            "sea_only" => Some(Self::sea_only()),
            "top2" => Some(Self::top2()),
            "baselines3" => Some(Self::baselines3()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-empty by construction
    }

    /// Projects a full feature row onto this subset.
    pub fn select(&self, row: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| row[i]).collect()
    }
}
