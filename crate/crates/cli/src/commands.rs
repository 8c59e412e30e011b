//! Command implementations. Outputs are written atomically as whole files, so
//! re-running a command with the same inputs and seed overwrites with
//! identical bytes.

use crate::config::{subset_by_name, RunManifest, SweepConfigFile, TrainConfigFile};
use anyhow::{anyhow, bail, Context, Result};
use entroscope_core::cache::{
    csv_split, read_records, write_records_csv, write_records_jsonl, FeatureRecord,
};
use entroscope_core::classifier::{train_on_group, CorrectnessModel, TrainConfig, TrainError};
use entroscope_core::estimate::{estimates_csv, evaluate_holdout};
use entroscope_core::eval::diagnose as diagnose_records;
use entroscope_core::sweep::{
    aggregate, aggregate_csv, difficulty_pairs_csv, estimates_csv as sweep_estimates_csv,
    leave_one_out, results_csv, run_sweep, AggregateKey, EstimatorConfig, SweepConfig, SweepResult,
    SweepRow,
};
use entroscope_core::synth::{generate, SynthSpec};
use entroscope_core::trace::{parse_traces, write_traces};
use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::str::FromStr;

/// Marker for strict-mode input rejection (exit code 2).
#[derive(Debug)]
pub struct StrictRejection(pub String);

impl std::fmt::Display for StrictRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "input rejected: {}", self.0)
    }
}

impl std::error::Error for StrictRejection {}

pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<StrictRejection>().is_some() {
        return 2;
    }
    if let Some(train_err) = err.downcast_ref::<TrainError>() {
        return match train_err {
            TrainError::SingleClass
            | TrainError::TooFewRows { .. }
            | TrainError::MissingLabels
            | TrainError::MissingDomain(_) => 3,
            _ => 1,
        };
    }
    1
}

fn read_feature_files(paths: &[std::path::PathBuf]) -> Result<Vec<FeatureRecord>> {
    let mut records = Vec::new();
    for path in paths {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let recs = read_records(BufReader::new(file))
            .with_context(|| format!("reading {}", path.display()))?;
        records.extend(recs);
    }
    Ok(records)
}

pub fn extract(
    traces: &[std::path::PathBuf],
    out: &Path,
    strict: bool,
    csv: Option<&Path>,
) -> Result<()> {
    let mut records = Vec::new();
    let mut total_rejected = 0usize;
    for path in traces {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let parsed = parse_traces(BufReader::new(file), strict);
        let (accepted, report) = match parsed {
            Ok(ok) => ok,
            Err(e) if strict => {
                return Err(anyhow!(StrictRejection(format!("{}: {e}", path.display()))))
            }
            Err(e) => return Err(anyhow!(e)).with_context(|| format!("{}", path.display())),
        };
        for (line, cause) in &report.rejections {
            eprintln!("{}:{line}: skipped: {cause}", path.display());
        }
        total_rejected += report.rejected();
        records.extend(accepted.iter().map(entroscope_core::cache::extract_record));
    }
    let mut buf = Vec::new();
    write_records_jsonl(&mut buf, &records)?;
    fs::write(out, buf).with_context(|| format!("writing {}", out.display()))?;
    if let Some(csv_path) = csv {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records)?;
        fs::write(csv_path, buf).with_context(|| format!("writing {}", csv_path.display()))?;
    }
    eprintln!("extracted {} records, rejected {total_rejected} lines", records.len());
    Ok(())
}

pub fn diagnose(features: &[std::path::PathBuf], out: &Path) -> Result<()> {
    let records = read_feature_files(features)?;
    let table = diagnose_records(&records)?;
    fs::write(out, table.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    eprintln!("diagnosed {} statistics over {} domains", table.rows.len(), table.domains.len());
    Ok(())
}

pub fn train(
    features: &[std::path::PathBuf],
    group: &str,
    config_path: &Path,
    out: &Path,
    cli_seed: u64,
) -> Result<()> {
    let records = read_feature_files(features)?;
    let file = TrainConfigFile::load(config_path)?;
    let group_set: BTreeSet<String> =
        group.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    if group_set.is_empty() {
        bail!("--group lists no domains");
    }
    let config = TrainConfig {
        family: file.family,
        balance: file.balance,
        calibrate: file.calibrate,
        feature_subset: subset_by_name(&file.feature_subset)?,
        seed: file.seed.unwrap_or(cli_seed),
        cv_folds: file.cv_folds,
    };
    let model = train_on_group(&records, &group_set, &config).map_err(anyhow::Error::new)?;
    fs::write(out, model.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "trained {} on {} ({} rows), chose {}",
        config.family,
        model.meta.group_id(),
        model.meta.n_rows,
        model.meta.chosen_hyperparams
    );
    Ok(())
}

pub fn estimate(model_path: &Path, features: &[std::path::PathBuf], out: &Path) -> Result<()> {
    let text = fs::read_to_string(model_path)
        .with_context(|| format!("reading {}", model_path.display()))?;
    let model = CorrectnessModel::from_json(&text).map_err(anyhow::Error::new)?;
    let records = read_feature_files(features)?;
    let holdout: BTreeSet<String> = records.iter().map(|r| r.domain_id.clone()).collect();
    let summary = evaluate_holdout(&model, &records, &holdout).map_err(anyhow::Error::new)?;
    fs::write(out, estimates_csv(&summary.estimates))
        .with_context(|| format!("writing {}", out.display()))?;
    match (summary.aee, summary.spearman) {
        (Some(aee), Some(rho)) => println!("aee={aee} spearman={rho}"),
        (Some(aee), None) => println!("aee={aee} spearman=n/a"),
        _ => println!("aee=n/a spearman=n/a (holdout unlabeled)"),
    }
    Ok(())
}

pub fn synth(spec_path: &Path, out: &Path) -> Result<()> {
    let text =
        fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let spec: SynthSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    let traces = generate(&spec).map_err(anyhow::Error::new)?;
    let mut buf = Vec::new();
    write_traces(&mut buf, &traces).map_err(anyhow::Error::new)?;
    fs::write(out, buf).with_context(|| format!("writing {}", out.display()))?;
    eprintln!("generated {} traces over {} domains", traces.len(), spec.domains.len());
    Ok(())
}

pub fn sweep(manifest_path: &Path, out_flag: Option<&Path>, cli_seed: u64) -> Result<()> {
    let (manifest, base) = RunManifest::load(manifest_path)?;
    let config_file = SweepConfigFile::load(&RunManifest::resolve(&base, &manifest.config))?;

    let mut records = Vec::new();
    for (domain, path) in &manifest.domains {
        let full = RunManifest::resolve(&base, path);
        let file = fs::File::open(&full).with_context(|| format!("opening {}", full.display()))?;
        let recs = read_records(BufReader::new(file))
            .with_context(|| format!("reading {}", full.display()))?;
        let n_before = records.len();
        records.extend(recs.into_iter().filter(|r| &r.domain_id == domain));
        if records.len() == n_before {
            bail!("{}: no records for domain \"{domain}\"", full.display());
        }
    }

    let seed = config_file.seed.or(manifest.seed).unwrap_or(cli_seed);
    let config = SweepConfig {
        domains: manifest.domains.keys().cloned().collect(),
        k_values: config_file.k_values.clone(),
        estimator_configs: config_file.estimator_configs(),
        feature_subsets: config_file.subsets()?,
        seed,
        include_leave_one_out: config_file.include_leave_one_out,
        cv_folds: config_file.cv_folds,
    };

    let out_dir = out_flag
        .map(Path::to_path_buf)
        .or_else(|| manifest.output_dir.as_ref().map(|p| RunManifest::resolve(&base, p)))
        .ok_or_else(|| anyhow!("no output directory: pass --out or set output_dir"))?;
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    let result = run_sweep(&records, &config).map_err(anyhow::Error::new)?;
    fs::write(out_dir.join("results.csv"), results_csv(&result))?;
    fs::write(out_dir.join("estimates.csv"), sweep_estimates_csv(&result))?;
    let mut agg_rows = Vec::new();
    for key in [AggregateKey::K, AggregateKey::Family, AggregateKey::Balance, AggregateKey::Calibrate]
    {
        agg_rows.extend(aggregate(&result, key).map_err(anyhow::Error::new)?);
    }
    fs::write(out_dir.join("aggregates.csv"), aggregate_csv(&agg_rows))?;
    fs::write(out_dir.join("difficulty_pairs.csv"), difficulty_pairs_csv(&result))?;
    eprintln!("sweep finished: {} rows", result.rows.len());

    if config.include_leave_one_out {
        let loo = leave_one_out(&records, &config).map_err(anyhow::Error::new)?;
        fs::write(out_dir.join("loo_results.csv"), results_csv(&loo.result))?;
        match loo.spearman {
            Some(rho) => eprintln!("leave-one-out spearman={rho}"),
            None => eprintln!("leave-one-out spearman=n/a"),
        }
    }
    Ok(())
}

/// Rebuilds the row skeleton from results.csv (estimates are not needed for
/// aggregation or difficulty pairs).
fn parse_results_csv(text: &str) -> Result<SweepResult> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty results csv"))?;
    let expected =
        "group,k,family,balance,calibrate,subset,weighted_group_accuracy,aee,spearman,n_holdout,error";
    if header != expected {
        bail!("unexpected results.csv header: {header}");
    }
    let opt_f64 = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            Ok(Some(s.parse::<f64>()?))
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields = csv_split(line);
        if fields.len() != 11 {
            bail!("results.csv line {}: expected 11 fields, got {}", i + 2, fields.len());
        }
        let error = if fields[10].is_empty() { None } else { Some(fields[10].clone()) };
        rows.push(SweepRow {
            group: fields[0].split('+').map(|s| s.to_string()).collect(),
            k: fields[1].parse()?,
            config: EstimatorConfig {
                family: entroscope_core::classifier::Family::from_str(&fields[2])
                    .map_err(|e| anyhow!(e))?,
                balance: fields[3] == "1",
                calibrate: fields[4] == "1",
            },
            subset: fields[5].clone(),
            weighted_group_accuracy: opt_f64(&fields[6])?,
            aee: opt_f64(&fields[7])?,
            spearman: opt_f64(&fields[8])?,
            estimates: Vec::new(),
            error,
        });
    }
    Ok(SweepResult { rows })
}

pub fn report(results: &Path, by: &str, out: &Path, pairs: Option<&Path>) -> Result<()> {
    let key = match by {
        "k" => AggregateKey::K,
        "classifier" => AggregateKey::Family,
        "calibration" => AggregateKey::Calibrate,
        "balance" => AggregateKey::Balance,
        other => bail!("unknown factor \"{other}\" (one of: k, classifier, calibration, balance)"),
    };
    let text =
        fs::read_to_string(results).with_context(|| format!("reading {}", results.display()))?;
    let result = parse_results_csv(&text)?;
    let agg = aggregate(&result, key).map_err(anyhow::Error::new)?;
    fs::write(out, aggregate_csv(&agg)).with_context(|| format!("writing {}", out.display()))?;
    if let Some(pairs_path) = pairs {
        fs::write(pairs_path, difficulty_pairs_csv(&result))
            .with_context(|| format!("writing {}", pairs_path.display()))?;
    }
    eprintln!("aggregated {} rows into {} buckets by {by}", result.rows.len(), agg.len());
    Ok(())
}
