//! Synthetic labeled trace corpora with controllable per-domain accuracy and
//! entropy separation; the ground-truth oracle for end-to-end checks.
//!
//! Each step is a two-parameter distribution (dominant mass p1, remainder
//! uniform over 19 atoms) whose truncated entropy is strictly monotone in p1,
//! so generation is exact and invertible: a per-step entropy target drawn from
//! the label's Gamma distribution is realized by solving for p1. The chosen
//! token is sampled from the same distribution, which couples the NLL-family
//! baselines to entropy.

use crate::rng::{derive_rng, gamma};
use crate::trace::{DecodingTrace, TopKStep, MAX_STEP_ENTROPY};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    TargetOutOfRange { target: f64 },
    InvalidSpec(String),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::TargetOutOfRange { target } => {
                write!(f, "entropy target {target} outside [0, ln 20]")
            }
            SynthError::InvalidSpec(m) => write!(f, "invalid synth spec: {m}"),
        }
    }
}

impl std::error::Error for SynthError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthDomain {
    pub domain_id: String,
    pub n_instances: usize,
    pub true_accuracy: f64,
}

/// Corpus recipe: per-domain sizes and accuracies, per-label entropy means,
/// per-step dispersion (standard deviation of the Gamma entropy draw), and the
/// trajectory length range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub version: u32,
    pub seed: u64,
    pub model_id: String,
    pub domains: Vec<SynthDomain>,
    pub entropy_mean_correct: f64,
    pub entropy_mean_incorrect: f64,
    pub dispersion: f64,
    pub t_min: usize,
    pub t_max: usize,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.version != 1 {
            return Err(SynthError::InvalidSpec(format!("unsupported version {}", self.version)));
        }
        if self.domains.is_empty() {
            return Err(SynthError::InvalidSpec("no domains".into()));
        }
        for d in &self.domains {
            if !(0.0..=1.0).contains(&d.true_accuracy) {
                return Err(SynthError::InvalidSpec(format!(
                    "true_accuracy {} outside [0, 1] for \"{}\"",
                    d.true_accuracy, d.domain_id
                )));
            }
            if d.n_instances == 0 {
                return Err(SynthError::InvalidSpec(format!(
                    "domain \"{}\" has no instances",
                    d.domain_id
                )));
            }
        }
        for (name, mu) in [
            ("entropy_mean_correct", self.entropy_mean_correct),
            ("entropy_mean_incorrect", self.entropy_mean_incorrect),
        ] {
            if !(mu > 0.0 && mu < MAX_STEP_ENTROPY) {
                return Err(SynthError::InvalidSpec(format!("{name} {mu} outside (0, ln 20)")));
            }
        }
        // equality is allowed so null (no-signal) corpora can be generated
        if self.entropy_mean_incorrect < self.entropy_mean_correct {
            return Err(SynthError::InvalidSpec(
                "entropy_mean_incorrect must not be below entropy_mean_correct".into(),
            ));
        }
        if self.dispersion < 0.0 {
            return Err(SynthError::InvalidSpec("dispersion must be >= 0".into()));
        }
        if self.t_min < 1 || self.t_max < self.t_min {
            return Err(SynthError::InvalidSpec("need 1 <= t_min <= t_max".into()));
        }
        Ok(())
    }
}

/// Truncated entropy of the (p1, uniform remainder over 19 atoms) step family;
/// strictly decreasing on p1 in [0.05, 1].
pub fn step_entropy_of_p1(p1: f64) -> f64 {
    if p1 >= 1.0 {
        return 0.0;
    }
    let rest = (1.0 - p1) / 19.0;
    -(p1 * p1.ln() + 19.0 * rest * rest.ln())
}

/// Inverts the step family: finds p1 in [0.05, 1] whose truncated entropy
/// matches the target (bisection; the realized entropy lands within 1e-6).
pub fn solve_p1(target: f64) -> Result<f64, SynthError> {
    if !target.is_finite() || !(0.0..=MAX_STEP_ENTROPY).contains(&target) {
        return Err(SynthError::TargetOutOfRange { target });
    }
    if target == 0.0 {
        return Ok(1.0);
    }
    if target >= MAX_STEP_ENTROPY {
        return Ok(0.05);
    }
    let mut lo = 0.05; // entropy ln(20)
    let mut hi = 1.0; // entropy 0
    while hi - lo > 1e-12 {
        let mid = (lo + hi) / 2.0;
        if step_entropy_of_p1(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / 2.0)
}

fn make_step(p1: f64, rng: &mut rand_chacha::ChaCha8Rng) -> TopKStep {
    if p1 >= 1.0 {
        return TopKStep::new(vec![("t0".to_string(), 0.0)], 0.0).expect("one-hot step is valid");
    }
    let lp1 = p1.ln();
    let rest_lp = ((1.0 - p1) / 19.0).ln();
    let mut entries = Vec::with_capacity(20);
    entries.push(("t0".to_string(), lp1));
    for i in 1..20 {
        entries.push((format!("t{i}"), rest_lp));
    }
    // chosen token follows the same distribution, tying NLL to entropy
    let chosen_lp = if rng.gen::<f64>() < p1 {
        lp1
    } else {
        let _other = rng.gen_range(1..20usize);
        rest_lp
    };
    TopKStep::new(entries, chosen_lp).expect("generated step is valid")
}

/// Generates the corpus. Instances are independently seeded from
/// (seed, domain, index), so output is byte-identical for a given spec
/// regardless of generation order.
pub fn generate(spec: &SynthSpec) -> Result<Vec<DecodingTrace>, SynthError> {
    spec.validate()?;
    let mut traces = Vec::with_capacity(spec.domains.iter().map(|d| d.n_instances).sum());
    for domain in &spec.domains {
        for i in 0..domain.n_instances {
            let mut rng = derive_rng(
                spec.seed,
                &[b"synth", domain.domain_id.as_bytes(), &(i as u64).to_le_bytes()],
            );
            let correct = rng.gen::<f64>() < domain.true_accuracy;
            let t = rng.gen_range(spec.t_min..=spec.t_max);
            let mu = if correct { spec.entropy_mean_correct } else { spec.entropy_mean_incorrect };
            let mut steps = Vec::with_capacity(t);
            for _ in 0..t {
                let target = gamma(mu, spec.dispersion, &mut rng).clamp(0.0, MAX_STEP_ENTROPY);
                let p1 = solve_p1(target)?;
                steps.push(make_step(p1, &mut rng));
            }
            let trace = DecodingTrace::new(
                format!("{}-{i:05}", domain.domain_id),
                domain.domain_id.clone(),
                spec.model_id.clone(),
                Some(correct),
                steps,
            )
            .expect("t_min >= 1");
            traces.push(trace);
        }
    }
    Ok(traces)
}

/// Convenience recipe used by tests and examples: evenly spaced accuracies
/// over [lo, hi] with a given per-domain size.
pub fn linspace_spec(
    n_domains: usize,
    n_instances: usize,
    accuracy_lo: f64,
    accuracy_hi: f64,
    seed: u64,
) -> SynthSpec {
    let domains = (0..n_domains)
        .map(|i| {
            let frac = if n_domains > 1 { i as f64 / (n_domains - 1) as f64 } else { 0.5 };
            SynthDomain {
                domain_id: format!("d{i}"),
                n_instances,
                true_accuracy: accuracy_lo + frac * (accuracy_hi - accuracy_lo),
            }
        })
        .collect();
    SynthSpec {
        version: 1,
        seed,
        model_id: "synth".to_string(),
        domains,
        entropy_mean_correct: 0.6,
        entropy_mean_incorrect: 1.6,
        dispersion: 0.25,
        t_min: 20,
        t_max: 60,
    }
}
