//! Decoding-trace data model: validated top-k logprob steps, truncated-entropy
//! trajectories, and the trace JSON Lines format.
//!
//! All logprobs are natural-log. Entropy is computed over the entries present
//! with no renormalization and no tail correction, so a step's entropy is the
//! truncated entropy of its top-k list, bounded by ln(k').

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};

/// ln(20): entropy ceiling for a full 20-entry step.
pub const MAX_STEP_ENTROPY: f64 = 2.995732273553991;

/// Maximum entries per step (top-20, the most commercial APIs expose).
pub const MAX_TOP_K: usize = 20;

/// Slack on the top-k probability mass check; logprobs arrive at float precision.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum TraceError {
    /// A step violated a TopKStep invariant. `index` is the step position in the trace.
    InvalidStep { index: usize, violation: StepViolation },
    /// A trace had no steps.
    EmptyTrace,
    /// Label was present but not 0 or 1.
    InvalidLabel { value: u8 },
    /// A line could not be parsed as a trace record at all.
    MalformedLine { line: usize, cause: String },
    /// A line parsed but violated the schema. `field` names the offending field.
    SchemaViolation { line: usize, field: String, cause: String },
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepViolation {
    NoEntries,
    TooManyEntries,
    EntriesUnsorted,
    NonFiniteLogprob,
    PositiveLogprob,
    MassExceedsOne,
    NonFiniteChosenLogprob,
    PositiveChosenLogprob,
}

impl StepViolation {
    /// Schema field the violation belongs to.
    pub fn field(&self) -> &'static str {
        match self {
            StepViolation::NoEntries
            | StepViolation::TooManyEntries
            | StepViolation::EntriesUnsorted
            | StepViolation::MassExceedsOne => "top",
            StepViolation::NonFiniteLogprob | StepViolation::PositiveLogprob => "logprob",
            StepViolation::NonFiniteChosenLogprob | StepViolation::PositiveChosenLogprob => {
                "chosen_logprob"
            }
        }
    }
}

impl fmt::Display for StepViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            StepViolation::NoEntries => "step has no entries",
            StepViolation::TooManyEntries => "step has more than 20 entries",
            StepViolation::EntriesUnsorted => "entries not sorted by logprob descending",
            StepViolation::NonFiniteLogprob => "entry logprob is not finite",
            StepViolation::PositiveLogprob => "entry logprob is positive",
            StepViolation::MassExceedsOne => "top-k probability mass exceeds 1",
            StepViolation::NonFiniteChosenLogprob => "chosen_logprob is not finite",
            StepViolation::PositiveChosenLogprob => "chosen_logprob is positive",
        };
        f.write_str(msg)
    }
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::InvalidStep { index, violation } => {
                write!(f, "invalid step {index}: {violation}")
            }
            TraceError::EmptyTrace => write!(f, "trace has no steps"),
            TraceError::InvalidLabel { value } => {
                write!(f, "label must be 0 or 1, got {value}")
            }
            TraceError::MalformedLine { line, cause } => {
                write!(f, "line {line}: malformed record: {cause}")
            }
            TraceError::SchemaViolation { line, field, cause } => {
                write!(f, "line {line}: schema violation in \"{field}\": {cause}")
            }
            TraceError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for TraceError {}

/// One decoding step: top-k candidates sorted by logprob descending, plus the
/// logprob of the token that was actually emitted (which may lie outside the
/// top-k list).
#[derive(Debug, Clone, PartialEq)]
pub struct TopKStep {
    entries: Vec<(String, f64)>,
    chosen_logprob: f64,
}

impl TopKStep {
    pub fn new(entries: Vec<(String, f64)>, chosen_logprob: f64) -> Result<Self, StepViolation> {
        if entries.is_empty() {
            return Err(StepViolation::NoEntries);
        }
        if entries.len() > MAX_TOP_K {
            return Err(StepViolation::TooManyEntries);
        }
        let mut mass = 0.0;
        let mut prev = f64::INFINITY;
        for &(_, lp) in &entries {
            if !lp.is_finite() {
                return Err(StepViolation::NonFiniteLogprob);
            }
            if lp > 0.0 {
                return Err(StepViolation::PositiveLogprob);
            }
            if lp > prev {
                return Err(StepViolation::EntriesUnsorted);
            }
            prev = lp;
            mass += lp.exp();
        }
        if mass > 1.0 + PROB_SUM_TOLERANCE {
            return Err(StepViolation::MassExceedsOne);
        }
        if !chosen_logprob.is_finite() {
            return Err(StepViolation::NonFiniteChosenLogprob);
        }
        if chosen_logprob > 0.0 {
            return Err(StepViolation::PositiveChosenLogprob);
        }
        Ok(TopKStep { entries, chosen_logprob })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn chosen_logprob(&self) -> f64 {
        self.chosen_logprob
    }
}

/// One generation: per-step top-k logprob lists, ids, and an optional
/// correctness label (`true` = correct).
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingTrace {
    instance_id: String,
    domain_id: String,
    model_id: String,
    label: Option<bool>,
    steps: Vec<TopKStep>,
}

impl DecodingTrace {
    pub fn new(
        instance_id: String,
        domain_id: String,
        model_id: String,
        label: Option<bool>,
        steps: Vec<TopKStep>,
    ) -> Result<Self, TraceError> {
        if steps.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        Ok(DecodingTrace { instance_id, domain_id, model_id, label, steps })
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    pub fn domain_id(&self) -> &str {
        &self.domain_id
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn label(&self) -> Option<bool> {
        self.label
    }

    pub fn steps(&self) -> &[TopKStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false // T >= 1 by construction
    }
}

/// Per-step truncated entropies of one trace; every value in [0, ln 20].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrajectory {
    values: Vec<f64>,
}

impl EntropyTrajectory {
    /// Wraps precomputed entropy values, enforcing the range invariant
    /// (1e-9 slack above ln 20 for float error).
    pub fn new(values: Vec<f64>) -> Result<Self, TraceError> {
        if values.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || !(0.0..=MAX_STEP_ENTROPY + 1e-9).contains(&v) {
                return Err(TraceError::InvalidStep {
                    index: i,
                    violation: StepViolation::MassExceedsOne,
                });
            }
        }
        Ok(EntropyTrajectory { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Truncated entropy of one step: -sum over present entries of p*ln(p),
/// no renormalization, no tail correction.
pub fn truncated_entropy(step: &TopKStep) -> f64 {
    -step
        .entries
        .iter()
        .map(|&(_, lp)| {
            let p = lp.exp();
            p * lp
        })
        .sum::<f64>()
}

/// Per-step truncated entropies, in step order.
pub fn entropy_trajectory(trace: &DecodingTrace) -> EntropyTrajectory {
    EntropyTrajectory {
        values: trace.steps.iter().map(truncated_entropy).collect(),
    }
}

// --- JSON Lines format -----------------------------------------------------
//
// One record per line:
// {"instance_id": str, "domain_id": str, "model_id": str, "label": 0|1|null,
//  "steps": [{"top": [[token, logprob], ...], "chosen_logprob": float}, ...]}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTraceRecord {
    instance_id: String,
    domain_id: String,
    model_id: String,
    #[serde(default)]
    label: Option<u8>,
    steps: Vec<RawStep>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    top: Vec<(String, f64)>,
    chosen_logprob: f64,
}

fn validate_record(raw: RawTraceRecord, line: usize) -> Result<DecodingTrace, TraceError> {
    let label = match raw.label {
        None => None,
        Some(0) => Some(false),
        Some(1) => Some(true),
        Some(v) => {
            return Err(TraceError::SchemaViolation {
                line,
                field: "label".into(),
                cause: format!("label must be 0 or 1, got {v}"),
            })
        }
    };
    if raw.steps.is_empty() {
        return Err(TraceError::SchemaViolation {
            line,
            field: "steps".into(),
            cause: "trace has no steps".into(),
        });
    }
    let mut steps = Vec::with_capacity(raw.steps.len());
    for (i, s) in raw.steps.into_iter().enumerate() {
        let step = TopKStep::new(s.top, s.chosen_logprob).map_err(|violation| {
            TraceError::SchemaViolation {
                line,
                field: violation.field().into(),
                cause: format!("step {i}: {violation}"),
            }
        })?;
        steps.push(step);
    }
    DecodingTrace::new(raw.instance_id, raw.domain_id, raw.model_id, label, steps)
}

/// What the lenient parser skipped, with 1-based line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseReport {
    pub accepted: usize,
    pub rejections: Vec<(usize, String)>,
}

impl ParseReport {
    pub fn rejected(&self) -> usize {
        self.rejections.len()
    }
}

/// Parses a trace JSONL stream. In strict mode the first bad line aborts; in
/// lenient mode bad lines are counted and skipped with their line numbers.
pub fn parse_traces<R: BufRead>(
    reader: R,
    strict: bool,
) -> Result<(Vec<DecodingTrace>, ParseReport), TraceError> {
    let mut traces = Vec::new();
    let mut report = ParseReport::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line.map_err(|e| TraceError::Io(e.to_string()))?;
        if text.trim().is_empty() {
            continue;
        }
        let parsed: Result<DecodingTrace, TraceError> =
            serde_json::from_str::<RawTraceRecord>(&text)
                .map_err(|e| TraceError::MalformedLine { line: line_no, cause: e.to_string() })
                .and_then(|raw| validate_record(raw, line_no));
        match parsed {
            Ok(trace) => {
                report.accepted += 1;
                traces.push(trace);
            }
            Err(e) if strict => return Err(e),
            Err(e) => report.rejections.push((line_no, e.to_string())),
        }
    }
    Ok((traces, report))
}

/// Canonical single-line JSON for one trace.
pub fn trace_to_json(trace: &DecodingTrace) -> String {
    let raw = RawTraceRecord {
        instance_id: trace.instance_id.clone(),
        domain_id: trace.domain_id.clone(),
        model_id: trace.model_id.clone(),
        label: trace.label.map(u8::from),
        steps: trace
            .steps
            .iter()
            .map(|s| RawStep { top: s.entries.clone(), chosen_logprob: s.chosen_logprob })
            .collect(),
    };
    serde_json::to_string(&raw).expect("trace record serializes")
}

/// Writes traces as JSONL, one canonical record per line.
pub fn write_traces<W: Write>(mut w: W, traces: &[DecodingTrace]) -> Result<(), TraceError> {
    for t in traces {
        writeln!(w, "{}", trace_to_json(t)).map_err(|e| TraceError::Io(e.to_string()))?;
    }
    Ok(())
}
