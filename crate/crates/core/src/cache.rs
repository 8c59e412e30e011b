//! Feature-cache records: one extracted row per trace (11 profile features,
//! 9 baselines, ids and label), with JSONL and CSV forms. Extraction is the
//! I/O-heavy stage, so everything downstream works from these caches.

use crate::baselines::{compute_baselines, BaselineVector, BASELINE_NAMES};
use crate::profile::{summarize, FEATURE_NAMES};
use crate::trace::{entropy_trajectory, DecodingTrace};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq)]
pub enum CacheError {
    Malformed { line: usize, cause: String },
    Io(String),
}

impl fmt::Display for CacheError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CacheError::Malformed { line, cause } => {
                write!(f, "line {line}: malformed feature record: {cause}")
            }
            CacheError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CacheError {}

/// One extracted instance. `features` follows [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureRecord {
    pub instance_id: String,
    pub domain_id: String,
    #[serde(with = "label_as_int")]
    pub label: Option<bool>,
    pub features: [f64; 11],
    pub baselines: BTreeMap<String, f64>,
}

mod label_as_int {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<bool>, s: S) -> Result<S::Ok, S::Error> {
        v.map(u8::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<bool>, D::Error> {
        match Option::<u8>::deserialize(d)? {
            None => Ok(None),
            Some(0) => Ok(Some(false)),
            Some(1) => Ok(Some(true)),
            Some(v) => Err(serde::de::Error::custom(format!("label must be 0 or 1, got {v}"))),
        }
    }
}

impl FeatureRecord {
    pub fn baseline(&self, name: &str) -> Option<f64> {
        let canonical = crate::baselines::canonical_metric_name(name)?;
        self.baselines.get(canonical).copied()
    }
}

/// Extracts the profile and baselines for one trace.
pub fn extract_record(trace: &DecodingTrace) -> FeatureRecord {
    let profile = summarize(&entropy_trajectory(trace));
    let baselines = compute_baselines(trace);
    FeatureRecord {
        instance_id: trace.instance_id().to_string(),
        domain_id: trace.domain_id().to_string(),
        label: trace.label(),
        features: profile.to_array(),
        baselines: baseline_map(&baselines),
    }
}

fn baseline_map(b: &BaselineVector) -> BTreeMap<String, f64> {
    BASELINE_NAMES
        .iter()
        .zip(b.to_array())
        .map(|(&n, v)| (n.to_string(), v))
        .collect()
}

/// Reads feature-cache JSONL. Cache files are machine-produced, so parsing is strict.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<FeatureRecord>, CacheError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let text = line.map_err(|e| CacheError::Io(e.to_string()))?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: FeatureRecord = serde_json::from_str(&text)
            .map_err(|e| CacheError::Malformed { line: idx + 1, cause: e.to_string() })?;
        records.push(rec);
    }
    Ok(records)
}

pub fn write_records_jsonl<W: Write>(mut w: W, records: &[FeatureRecord]) -> Result<(), CacheError> {
    for r in records {
        let line = serde_json::to_string(r).expect("feature record serializes");
        writeln!(w, "{line}").map_err(|e| CacheError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Fixed CSV header: ids, label, the 11 features, the 9 baselines.
pub fn csv_header() -> String {
    let mut cols = vec!["instance_id".to_string(), "domain_id".to_string(), "label".to_string()];
    cols.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    cols.extend(BASELINE_NAMES.iter().map(|s| s.to_string()));
    cols.join(",")
}

pub fn write_records_csv<W: Write>(mut w: W, records: &[FeatureRecord]) -> Result<(), CacheError> {
    let io_err = |e: std::io::Error| CacheError::Io(e.to_string());
    writeln!(w, "{}", csv_header()).map_err(io_err)?;
    for r in records {
        let mut fields = vec![
            csv_escape(&r.instance_id),
            csv_escape(&r.domain_id),
            r.label.map(|l| u8::from(l).to_string()).unwrap_or_default(),
        ];
        fields.extend(r.features.iter().map(|v| v.to_string()));
        for name in BASELINE_NAMES {
            fields.push(r.baselines.get(name).map(|v| v.to_string()).unwrap_or_default());
        }
        writeln!(w, "{}", fields.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// Quotes a CSV field only when it needs it.
pub fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Splits one CSV line written by [`csv_escape`], undoing the quoting.
pub fn csv_split(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    current.push('"');
                } else {
                    quoted = false;
                }
            }
            '"' if current.is_empty() => quoted = true,
            ',' if !quoted => fields.push(std::mem::take(&mut current)),
            c => current.push(c),
        }
    }
    fields.push(current);
    fields
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TopKStep;

    fn sample_trace(label: Option<bool>) -> DecodingTrace {
        let steps = vec![
            TopKStep::new(vec![("a".into(), -0.5), ("b".into(), -1.5)], -0.5).unwrap(),
            TopKStep::new(vec![("a".into(), 0.0)], 0.0).unwrap(),
        ];
        DecodingTrace::new("x1".into(), "dom".into(), "m".into(), label, steps).unwrap()
    }

    #[test]
    fn extract_fills_all_fields() {
        let rec = extract_record(&sample_trace(Some(true)));
        assert_eq!(rec.instance_id, "x1");
        assert_eq!(rec.domain_id, "dom");
        assert_eq!(rec.label, Some(true));
        assert_eq!(rec.baselines.len(), 9);
        assert!(rec.features.iter().all(|v| v.is_finite()));
        // se family mirrors the profile features exactly
        assert_eq!(rec.baselines["se_sum"], rec.features[10]);
        assert_eq!(rec.baselines["se_avg"], rec.features[1]);
        assert_eq!(rec.baselines["se_max"], rec.features[0]);
    }

    #[test]
    fn jsonl_round_trip() {
        let records = vec![extract_record(&sample_trace(Some(false))), extract_record(&sample_trace(None))];
        let mut buf = Vec::new();
        write_records_jsonl(&mut buf, &records).unwrap();
        let back = read_records(buf.as_slice()).unwrap();
        assert_eq!(records, back);
        let mut buf2 = Vec::new();
        write_records_jsonl(&mut buf2, &back).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn bad_label_in_cache_rejected() {
        let line = r#"{"instance_id":"a","domain_id":"d","label":3,"features":[0,0,0,0,0,0,0,0,0,0,0],"baselines":{}}"#;
        assert!(matches!(read_records(line.as_bytes()), Err(CacheError::Malformed { line: 1, .. })));
    }

    #[test]
    fn csv_has_fixed_header_and_row_arity() {
        let records = vec![extract_record(&sample_trace(Some(true)))];
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("instance_id,domain_id,label,h_max,"));
        assert_eq!(header.split(',').count(), 3 + 11 + 9);
        assert_eq!(lines.next().unwrap().split(',').count(), 3 + 11 + 9);
    }

    #[test]
    fn csv_escaping() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("q\"q"), "\"q\"\"q\"");
    }

    #[test]
    fn csv_split_undoes_escape() {
        for fields in [
            vec!["a", "b,c", "", "d\"e", "plain"],
            vec!["x"],
            vec!["", ""],
        ] {
            let line = fields.iter().map(|f| csv_escape(f)).collect::<Vec<_>>().join(",");
            let back = csv_split(&line);
            assert_eq!(back, fields);
        }
    }
}
