//! Versioned JSON config-file schemas. Unknown keys are rejected so a typo
//! cannot silently change an experiment.

use anyhow::{bail, Context, Result};
use entroscope_core::classifier::Family;
use entroscope_core::profile::FeatureSubset;
use entroscope_core::sweep::{all_estimator_configs, EstimatorConfig};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const CONFIG_VERSION: u32 = 1;

fn check_version(version: u32, what: &str) -> Result<()> {
    if version != CONFIG_VERSION {
        bail!("{what}: unsupported version {version} (expected {CONFIG_VERSION})");
    }
    Ok(())
}

pub fn subset_by_name(name: &str) -> Result<FeatureSubset> {
    FeatureSubset::by_name(name).with_context(|| {
        format!(
            "unknown feature subset \"{name}\" (one of: full11, max_only, sea_only, top2, baselines3)"
        )
    })
}

/// `train --config` file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfigFile {
    pub version: u32,
    pub family: Family,
    #[serde(default)]
    pub balance: bool,
    #[serde(default)]
    pub calibrate: bool,
    #[serde(default = "default_subset")]
    pub feature_subset: String,
    pub seed: Option<u64>,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
}

fn default_subset() -> String {
    "full11".to_string()
}

fn default_folds() -> usize {
    5
}

impl TrainConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let file: TrainConfigFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        check_version(file.version, "train config")?;
        Ok(file)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimatorConfigFile {
    family: Family,
    #[serde(default)]
    balance: bool,
    #[serde(default)]
    calibrate: bool,
}

/// Sweep config referenced from the manifest.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfigFile {
    pub version: u32,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    /// Defaults to the full 3 x 2 x 2 ablation.
    estimators: Option<Vec<EstimatorConfigFile>>,
    #[serde(default = "default_subsets")]
    pub feature_subsets: Vec<String>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub include_leave_one_out: bool,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
}

fn default_k_values() -> Vec<usize> {
    vec![1, 2, 3, 4]
}

fn default_subsets() -> Vec<String> {
    vec!["full11".to_string()]
}

impl SweepConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let file: SweepConfigFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        check_version(file.version, "sweep config")?;
        Ok(file)
    }

    pub fn estimator_configs(&self) -> Vec<EstimatorConfig> {
        match &self.estimators {
            None => all_estimator_configs(),
            Some(list) => list
                .iter()
                .map(|e| EstimatorConfig {
                    family: e.family,
                    balance: e.balance,
                    calibrate: e.calibrate,
                })
                .collect(),
        }
    }

    pub fn subsets(&self) -> Result<Vec<FeatureSubset>> {
        self.feature_subsets.iter().map(|n| subset_by_name(n)).collect()
    }
}

/// `sweep` manifest: per-domain feature caches plus the config file path.
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: u32,
    pub domains: BTreeMap<String, PathBuf>,
    pub config: PathBuf,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        check_version(manifest.version, "run manifest")?;
        if manifest.domains.is_empty() {
            bail!("run manifest lists no domains");
        }
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((manifest, base))
    }

    pub fn resolve(base: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}
