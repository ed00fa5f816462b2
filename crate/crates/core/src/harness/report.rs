use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::segment_layout;
use crate::signals::ExploratoryAction;
use crate::transfer::SelectionMethod;

use super::config::Mode;
use super::experiment::RunResult;
use super::HarnessError;

pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.json";
pub const RESULT_FILE: &str = "result.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub trials: usize,
    pub initial_accuracy: Option<f64>,
    /// mean curve at the first point
    pub one_shot_accuracy: Option<f64>,
    /// mean curve at the last point
    pub final_accuracy: Option<f64>,
    pub curve_len: usize,
    pub stopped_early: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecisionStats {
    pub total: usize,
    pub none: usize,
    pub none_fraction: Option<f64>,
    pub mean_rho_selected: Option<f64>,
    /// selected old object id -> count
    pub selected: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub mode: Mode,
    pub trials: usize,
    pub failures: usize,
    pub budget: usize,
    pub epsilon_explore: f64,
    pub epsilon_neg1: f64,
    pub epsilon_neg2: f64,
    pub selection: SelectionMethod,
    pub arms: BTreeMap<String, ArmSummary>,
    /// over every decision logged during the loops, per arm
    pub decisions: BTreeMap<String, DecisionStats>,
    /// arm -> action -> modality -> mean final weight
    pub weights: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
}

pub fn summarize(result: &RunResult) -> Summary {
    let cfg = &result.config;
    let ok: Vec<_> = result.trials.iter().filter(|t| !t.failed()).collect();
    let mut arms = BTreeMap::new();
    let mut decisions: BTreeMap<String, DecisionStats> = BTreeMap::new();
    let mut weight_sums: BTreeMap<String, BTreeMap<String, BTreeMap<String, (f64, usize)>>> = BTreeMap::new();
    for (mode, curve) in &result.mean_curves {
        let runs: Vec<_> = ok.iter().flat_map(|t| &t.arms).filter(|a| &a.mode == mode).collect();
        let initial: Vec<f64> = runs.iter().filter_map(|a| a.initial_accuracy).collect();
        arms.insert(
            mode.clone(),
            ArmSummary {
                trials: runs.len(),
                initial_accuracy: (!initial.is_empty()).then(|| initial.iter().sum::<f64>() / initial.len() as f64),
                one_shot_accuracy: curve.first().copied(),
                final_accuracy: curve.last().copied(),
                curve_len: curve.len(),
                stopped_early: runs.iter().filter(|a| a.stopped_early).count(),
            },
        );
        let mut stats = DecisionStats::default();
        let mut rho_sum = 0.0;
        for d in runs.iter().flat_map(|a| a.log.iter().flat_map(|e| &e.decisions)) {
            stats.total += 1;
            match d.selected {
                None => stats.none += 1,
                Some(o) => {
                    *stats.selected.entry(o.to_string()).or_default() += 1;
                    rho_sum += d.rho;
                }
            }
        }
        if stats.total > 0 {
            stats.none_fraction = Some(stats.none as f64 / stats.total as f64);
            let picked = stats.total - stats.none;
            stats.mean_rho_selected = (picked > 0).then(|| rho_sum / picked as f64);
            decisions.insert(mode.clone(), stats);
        }
        for (action, _, w) in runs.iter().flat_map(|a| &a.final_weights) {
            let Some(spec) = ExploratoryAction::standard(action) else { continue };
            let per = weight_sums.entry(mode.clone()).or_default().entry(action.clone()).or_default();
            for ((m, _), v) in segment_layout(spec.kind()).iter().zip(w) {
                let slot = per.entry(m.to_string()).or_insert((0.0, 0));
                slot.0 += v;
                slot.1 += 1;
            }
        }
    }
    let weights = weight_sums
        .into_iter()
        .map(|(arm, per)| {
            let per = per
                .into_iter()
                .map(|(a, ms)| (a, ms.into_iter().map(|(m, (s, n))| (m, s / n as f64)).collect()))
                .collect();
            (arm, per)
        })
        .collect();
    Summary {
        config_hash: result.config_hash.clone(),
        mode: cfg.mode,
        trials: result.trials.len(),
        failures: result.failures,
        budget: cfg.budget,
        epsilon_explore: cfg.epsilon_explore,
        epsilon_neg1: cfg.epsilon_neg1,
        epsilon_neg2: cfg.epsilon_neg2,
        selection: cfg.selection,
        arms,
        decisions,
        weights,
    }
}

/// `iteration,trial,mode,accuracy`, one row per curve point; `trial` is the
/// trial seed. Rows are ordered by seed, then arm, then iteration.
pub fn curves_csv(result: &RunResult) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(["iteration", "trial", "mode", "accuracy"]).map_err(io)?;
    for t in &result.trials {
        for arm in &t.arms {
            for (x, acc) in arm.x.iter().zip(&arm.curve) {
                w.write_record([x.to_string(), t.seed.to_string(), arm.mode.clone(), acc.to_string()])
                    .map_err(io)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), HarnessError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes the curves, the summary and the resolved config into `dir`.
pub fn report(result: &RunResult, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    write(dir, CURVES_FILE, &curves_csv(result)?)?;
    write(dir, SUMMARY_FILE, &pretty(&summarize(result)))?;
    write(dir, CONFIG_FILE, &pretty(&result.config))
}

/// Writes the full result (including wall-clock) as JSON.
pub fn write_result(result: &RunResult, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    write(dir, RESULT_FILE, &serde_json::to_string(result).expect("serializable"))
}

pub fn read_result(path: &Path) -> Result<RunResult, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}
