use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::active::StopRule;
use crate::gp::OptimizerConfig;
use crate::signals::{load_catalog, ActionKind, Catalog, ExploratoryAction, STANDARD_ACTIONS};
use crate::transfer::SelectionMethod;

use super::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Transfer,
    NoTransfer,
    MultiKernelAblation,
    NegativeTransfer,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Transfer" => Ok(Mode::Transfer),
            "NoTransfer" => Ok(Mode::NoTransfer),
            "MultiKernelAblation" => Ok(Mode::MultiKernelAblation),
            "NegativeTransfer" => Ok(Mode::NegativeTransfer),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

fn default_actions() -> Vec<String> {
    STANDARD_ACTIONS.iter().map(|s| s.to_string()).collect()
}
fn default_epsilon_explore() -> f64 {
    0.3
}
fn default_epsilon_neg() -> f64 {
    0.6
}
fn default_test_size() -> usize {
    20
}
fn default_test_size_static() -> usize {
    10
}
fn default_prior_samples() -> usize {
    10
}
fn default_calibration_samples() -> usize {
    4
}
fn default_stopping() -> Option<StopRule> {
    Some(StopRule::default())
}
fn default_ablation_sizes() -> Vec<usize> {
    vec![5, 10, 20, 40]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// relative paths resolve against the directory of the config file
    pub catalog: String,
    #[serde(default)]
    pub prior_objects: Vec<u32>,
    pub new_objects: Vec<u32>,
    #[serde(default = "default_actions")]
    pub actions: Vec<String>,
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub budget: usize,
    #[serde(default = "default_epsilon_explore")]
    pub epsilon_explore: f64,
    #[serde(default = "default_epsilon_neg")]
    pub epsilon_neg1: f64,
    #[serde(default = "default_epsilon_neg")]
    pub epsilon_neg2: f64,
    #[serde(default = "default_selection")]
    pub selection: SelectionMethod,
    pub mode: Mode,
    /// test observations per (object, action) for pressing and sliding
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    /// test observations per (object, action) for static contact
    #[serde(default = "default_test_size_static")]
    pub test_size_static: usize,
    /// observations per (old object, action) forming the prior knowledge
    #[serde(default = "default_prior_samples")]
    pub prior_samples: usize,
    /// unlabeled traces per (new object, action) used to fit the feature
    /// pipeline when there are no old objects
    #[serde(default = "default_calibration_samples")]
    pub calibration_samples: usize,
    /// `null` disables early stopping
    #[serde(default = "default_stopping")]
    pub stopping: Option<StopRule>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// training observations per object, ablation mode only
    #[serde(default = "default_ablation_sizes")]
    pub ablation_sizes: Vec<usize>,
}

fn default_selection() -> SelectionMethod {
    SelectionMethod::ModelPrediction
}

/// A config together with the resolved catalog.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub catalog_path: PathBuf,
    pub catalog: Catalog,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let version = value.get("schema_version").and_then(serde_json::Value::as_u64);
    if version != Some(u64::from(SCHEMA_VERSION)) {
        return Err(HarnessError::Config(format!(
            "schema_version must be {SCHEMA_VERSION}, found {}",
            version.map_or("none".to_string(), |v| v.to_string())
        )));
    }
    serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn resolve_catalog_path(config_path: &Path, catalog: &str) -> PathBuf {
    let p = Path::new(catalog);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Reads, parses and validates a config file and its catalog.
pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let config = parse_config(&text)?;
    let catalog_path = resolve_catalog_path(path, &config.catalog);
    let catalog = load_catalog(&catalog_path).map_err(|e| HarnessError::Config(format!("{}: {e}", catalog_path.display())))?;
    let loaded = LoadedConfig {
        config,
        catalog_path,
        catalog,
    };
    loaded.validate()?;
    Ok(loaded)
}

impl LoadedConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.config.validate()?;
        for id in self.config.prior_objects.iter().chain(&self.config.new_objects) {
            if self.catalog.object(*id).is_none() {
                return Err(HarnessError::Config(format!("object {id} is not in the catalog")));
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version must be {SCHEMA_VERSION}"));
        }
        let priors: BTreeSet<u32> = self.prior_objects.iter().copied().collect();
        let news: BTreeSet<u32> = self.new_objects.iter().copied().collect();
        if priors.len() != self.prior_objects.len() || news.len() != self.new_objects.len() {
            return bad("duplicate object ids".into());
        }
        if let Some(id) = priors.intersection(&news).next() {
            return bad(format!("object {id} is both a prior and a new object"));
        }
        if news.len() < 2 {
            return bad("at least two new objects are required".into());
        }
        if self.actions.is_empty() {
            return bad("action set is empty".into());
        }
        let mut seen = BTreeSet::new();
        for a in &self.actions {
            if ExploratoryAction::standard(a).is_none() {
                return bad(format!("unknown action {a:?}"));
            }
            if !seen.insert(a) {
                return bad(format!("duplicate action {a:?}"));
            }
        }
        if self.trials != self.seeds.len() {
            return bad(format!("trials = {} but {} seeds given", self.trials, self.seeds.len()));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return bad("duplicate seeds".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon_explore) {
            return bad(format!("epsilon_explore {} outside [0, 1]", self.epsilon_explore));
        }
        for (name, v) in [("epsilon_neg1", self.epsilon_neg1), ("epsilon_neg2", self.epsilon_neg2)] {
            if !(0.5..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0.5, 1]"));
            }
        }
        if self.test_size == 0 || (self.test_size_static == 0 && self.actions.iter().any(|a| is_static(a))) {
            return bad("empty test set for some (object, action)".into());
        }
        let needs_priors = matches!(self.mode, Mode::Transfer | Mode::NegativeTransfer);
        if needs_priors && self.prior_objects.is_empty() {
            return bad(format!("mode {} needs prior objects", self.mode));
        }
        // thermal PCA needs more profiles than retained components
        let pool = if self.prior_objects.is_empty() {
            self.new_objects.len() * self.calibration_samples
        } else {
            self.prior_objects.len() * self.prior_samples
        };
        if pool < crate::features::THERMAL_COMPONENTS + 1 {
            return bad(format!("feature fitting pool of {pool} traces is too small"));
        }
        if !self.prior_objects.is_empty() && self.prior_samples == 0 {
            return bad("prior_samples must be positive".into());
        }
        if self.mode == Mode::MultiKernelAblation && (self.ablation_sizes.is_empty() || self.ablation_sizes.contains(&0)) {
            return bad("ablation_sizes must be nonempty and positive".into());
        }
        if let Some(r) = &self.stopping {
            if r.window == 0 || !(r.min_gain.is_finite() && r.min_gain >= 0.0) {
                return bad("stopping rule needs a positive window and nonnegative min_gain".into());
            }
        }
        Ok(())
    }

    /// sha256 of the canonical JSON form (keys sorted, no whitespace).
    pub fn hash(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&v).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn action_specs(&self) -> Vec<ExploratoryAction> {
        self.actions
            .iter()
            .map(|a| ExploratoryAction::standard(a).expect("validated action"))
            .collect()
    }

    pub fn test_count(&self, action: &ExploratoryAction) -> usize {
        if action.kind() == ActionKind::StaticContact {
            self.test_size_static
        } else {
            self.test_size
        }
    }

    /// Size of the test set: objects × per-action counts.
    pub fn test_set_size(&self) -> usize {
        self.new_objects.len() * self.action_specs().iter().map(|a| self.test_count(a)).sum::<usize>()
    }

    /// Applies CLI overrides.
    pub fn with_overrides(mut self, seed_offset: Option<u64>, mode: Option<Mode>) -> Self {
        if let Some(off) = seed_offset {
            for s in &mut self.seeds {
                *s = s.wrapping_add(off);
            }
        }
        if let Some(m) = mode {
            self.mode = m;
        }
        self
    }
}

fn is_static(action: &str) -> bool {
    ExploratoryAction::standard(action).is_some_and(|a| a.kind() == ActionKind::StaticContact)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "schema_version": 1,
        "catalog": "desk_catalog.json",
        "prior_objects": [1, 2, 3],
        "new_objects": [11, 12, 13, 14, 15],
        "trials": 2,
        "seeds": [1, 2],
        "budget": 40,
        "mode": "Transfer"
    }"#;

    #[test]
    fn defaults_and_validation() {
        let c = parse_config(BASE).unwrap();
        c.validate().unwrap();
        assert_eq!(c.actions.len(), 7);
        assert_eq!(c.epsilon_explore, 0.3);
        assert_eq!(c.stopping, Some(StopRule::default()));
        assert_eq!(c.test_set_size(), 5 * (6 * 20 + 10));
    }

    #[test]
    fn full_scale_test_set() {
        let mut c = parse_config(BASE).unwrap();
        c.prior_objects.clear();
        c.new_objects = (1..=15).collect();
        c.mode = Mode::NoTransfer;
        assert_eq!(c.test_set_size(), 1950);
    }

    #[test]
    fn hash_ignores_key_order() {
        let reordered = r#"{"mode": "Transfer", "budget": 40, "seeds": [1, 2], "trials": 2,
            "new_objects": [11, 12, 13, 14, 15], "prior_objects": [1, 2, 3],
            "catalog": "desk_catalog.json", "schema_version": 1}"#;
        assert_eq!(parse_config(BASE).unwrap().hash(), parse_config(reordered).unwrap().hash());
        let mut other = parse_config(BASE).unwrap();
        other.budget = 39;
        assert_ne!(other.hash(), parse_config(BASE).unwrap().hash());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(parse_config(&BASE.replace("\"budget\": 40", "\"budget\": 40, \"extra\": 1")).is_err());
        assert!(parse_config(&BASE.replace("\"schema_version\": 1", "\"schema_version\": 2")).is_err());
        for (from, to) in [
            ("[1, 2, 3]", "[1, 2, 11]"),
            ("\"trials\": 2", "\"trials\": 3"),
            ("\"budget\": 40", "\"budget\": 40, \"epsilon_neg1\": 0.4"),
            ("\"budget\": 40", "\"budget\": 40, \"test_size\": 0"),
            ("\"budget\": 40", "\"budget\": 40, \"actions\": [\"P9\"]"),
            ("\"prior_objects\": [1, 2, 3]", "\"prior_objects\": []"),
        ] {
            let c = parse_config(&BASE.replace(from, to)).unwrap();
            assert!(c.validate().is_err(), "{from} -> {to}");
        }
        assert!(parse_config(&BASE.replace("\"budget\": 40", "\"budget\": -1")).is_err());
    }

    #[test]
    fn overrides() {
        let c = parse_config(BASE).unwrap().with_overrides(Some(100), Some(Mode::NoTransfer));
        assert_eq!(c.seeds, vec![101, 102]);
        assert_eq!(c.mode, Mode::NoTransfer);
    }
}
