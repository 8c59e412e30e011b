//! Turns LLM decoding logs (top-k next-token log-probabilities) into
//! per-instance correctness probabilities and domain-level accuracy estimates:
//! entropy-profile features, white-box UQ baselines, lightweight classifiers
//! with balancing and isotonic calibration, holdout evaluation, and the
//! exhaustive train/test composition sweep.

pub mod baselines;
pub mod cache;
pub mod calibration;
pub mod classifier;
pub mod estimate;
pub mod eval;
pub mod profile;
pub mod rng;
pub mod sweep;
pub mod synth;
pub mod trace;

pub use baselines::{compute_baselines, BaselineVector, Orientation};
pub use cache::{extract_record, FeatureRecord};
pub use calibration::{pava, IsotonicMap};
pub use classifier::{train_on_group, CorrectnessModel, Family, TrainConfig};
pub use estimate::{estimate_domain, evaluate_holdout, DomainEstimate, GroupSummary};
pub use eval::{aee, auroc, diagnose, spearman, ScoredLabels};
pub use profile::{quantile, summarize, EntropyProfile, FeatureSubset};
pub use sweep::{enumerate_groups, leave_one_out, run_sweep, SweepConfig, SweepResult};
pub use synth::{generate, solve_p1, SynthSpec};
pub use trace::{entropy_trajectory, parse_traces, truncated_entropy, DecodingTrace, TopKStep};
