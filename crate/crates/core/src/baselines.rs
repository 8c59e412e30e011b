//! White-box UQ baseline metrics computed from the same decoding logs:
//! truncated-entropy aggregates (SE family) and chosen-token logprob
//! aggregates (NLL family, LNTP, MTP, PPL).
//!
//! NLL always uses the chosen token's own logprob, never the top-k list, so
//! the baselines stay exact when the sampled token falls outside top-20.

use crate::trace::{entropy_trajectory, DecodingTrace};
use serde::{Deserialize, Serialize};

/// Canonical baseline names, in reporting order.
pub const BASELINE_NAMES: [&str; 9] = [
    "se_avg", "se_max", "se_sum", "nll_avg", "nll_max", "nll_sum", "lntp", "mtp", "ppl",
];

/// The nine baseline metrics for one trace.
///
/// Identities that hold by construction: `ppl * lntp = 1`,
/// `mtp = exp(-nll_max)`, and the SE family shares the truncated-entropy
/// definition with the profile features (`se_sum` equals `h_sea` bit for bit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineVector {
    pub se_avg: f64,
    pub se_max: f64,
    pub se_sum: f64,
    pub nll_avg: f64,
    pub nll_max: f64,
    pub nll_sum: f64,
    pub lntp: f64,
    pub mtp: f64,
    pub ppl: f64,
}

impl BaselineVector {
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.se_avg, self.se_max, self.se_sum, self.nll_avg, self.nll_max, self.nll_sum,
            self.lntp, self.mtp, self.ppl,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let canonical = canonical_metric_name(name)?;
        let idx = BASELINE_NAMES.iter().position(|&n| n == canonical)?;
        Some(self.to_array()[idx])
    }
}

/// Direction in which a metric signals incorrectness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Larger values mean the response is more likely incorrect.
    HigherMeansIncorrect,
    /// Smaller values mean the response is more likely incorrect
    /// (evaluated as 1 - AUROC of the raw score).
    LowerMeansIncorrect,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::HigherMeansIncorrect => "higher_means_incorrect",
            Orientation::LowerMeansIncorrect => "lower_means_incorrect",
        }
    }
}

/// Maps "sea"/"eas" aliases onto the canonical `se_sum`.
pub fn canonical_metric_name(name: &str) -> Option<&'static str> {
    let lower = name.to_ascii_lowercase();
    let canonical = match lower.as_str() {
        "sea" | "eas" | "se_sum" => "se_sum",
        "se_avg" => "se_avg",
        "se_max" => "se_max",
        "nll_avg" => "nll_avg",
        "nll_max" => "nll_max",
        "nll_sum" => "nll_sum",
        "lntp" => "lntp",
        "mtp" => "mtp",
        "ppl" => "ppl",
        "h_max" => "h_max",
        "h_mean" => "h_mean",
        "h_std" => "h_std",
        "h_q10" => "h_q10",
        "h_q25" => "h_q25",
        "h_q50" => "h_q50",
        "h_q75" => "h_q75",
        "h_q90" => "h_q90",
        "h_skew" | "skewness" => "h_skew",
        "h_kurt" | "kurtosis" => "h_kurt",
        "h_sea" => "h_sea",
        _ => return None,
    };
    Some(canonical)
}

/// Orientation of a profile statistic or baseline metric. LNTP, MTP, skewness
/// and kurtosis signal incorrectness when LOW; everything else when HIGH.
pub fn metric_orientation(name: &str) -> Option<Orientation> {
    let canonical = canonical_metric_name(name)?;
    Some(match canonical {
        "lntp" | "mtp" | "h_skew" | "h_kurt" => Orientation::LowerMeansIncorrect,
        _ => Orientation::HigherMeansIncorrect,
    })
}

/// Computes all nine baselines for one trace.
pub fn compute_baselines(trace: &DecodingTrace) -> BaselineVector {
    let traj = entropy_trajectory(trace);
    let t = traj.len() as f64;
    // same accumulation as the profile's h_sea / h_mean / h_max
    let se_sum: f64 = traj.values().iter().sum();
    let se_avg = se_sum / t;
    let se_max = traj.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut nll_sum = 0.0;
    let mut nll_max = f64::NEG_INFINITY;
    let mut lp_sum = 0.0;
    let mut lp_min = f64::INFINITY;
    for step in trace.steps() {
        let lp = step.chosen_logprob();
        let nll = -lp;
        nll_sum += nll;
        nll_max = nll_max.max(nll);
        lp_sum += lp;
        lp_min = lp_min.min(lp);
    }
    let nll_avg = nll_sum / t;

    BaselineVector {
        se_avg,
        se_max,
        se_sum,
        nll_avg,
        nll_max,
        nll_sum,
        lntp: (lp_sum / t).exp(),
        mtp: lp_min.exp(),
        ppl: nll_avg.exp(),
    }
}
