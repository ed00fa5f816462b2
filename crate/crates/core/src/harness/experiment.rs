use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active::{run_loop, Evaluator, ExplorationState, LoopEntry, World};
use crate::features::{FeatureObservation, Featurizer};
use crate::gp::OptimizerConfig;
use crate::seeds::{self, Namespace};
use crate::signals::{ExploratoryAction, ObjectSpec, SensorTrace, Simulator};
use crate::transfer::{Groups, PriorKnowledge, TransferDecision, TransferSettings};

use super::ablation::modality_ablation;
use super::config::{ExperimentConfig, LoadedConfig, Mode};
use super::HarnessError;

pub const NO_TRANSFER: &str = "NoTransfer";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub mode: String,
    /// x-axis of `curve`: acquisitions for loop arms, training size per
    /// object for ablation arms
    pub x: Vec<usize>,
    pub curve: Vec<f64>,
    pub initial_accuracy: Option<f64>,
    pub stopped_early: bool,
    pub log: Vec<LoopEntry>,
    pub final_decisions: Vec<TransferDecision>,
    /// (action, new object, weights) of the final models
    pub final_weights: Vec<(String, u32, Vec<f64>)>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub arms: Vec<ArmResult>,
    pub error: Option<String>,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        self.error.is_some() || self.arms.iter().any(|a| a.error.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config_hash: String,
    pub config: ExperimentConfig,
    /// sorted by seed
    pub trials: Vec<TrialResult>,
    /// element-wise mean over the successful trials of each arm
    pub mean_curves: BTreeMap<String, Vec<f64>>,
    pub failures: usize,
    pub wall_clock_s: f64,
}

/// Labeled traces of one (object, action) pair.
#[derive(Debug, Clone)]
pub struct TestPair {
    pub action: String,
    pub object: u32,
    pub traces: Vec<SensorTrace>,
}

#[derive(Debug, Clone)]
pub struct TestSet {
    pub pairs: Vec<TestPair>,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.pairs.iter().map(|p| p.traces.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn new_objects(loaded: &LoadedConfig) -> Vec<ObjectSpec> {
    let mut v: Vec<ObjectSpec> = loaded
        .config
        .new_objects
        .iter()
        .map(|id| loaded.catalog.object(*id).expect("validated object").clone())
        .collect();
    v.sort_by_key(|o| o.id);
    v
}

fn traces(
    sim: &Simulator,
    object: &ObjectSpec,
    action: &ExploratoryAction,
    action_index: usize,
    count: usize,
    seed: u64,
    ns: Namespace,
) -> Result<Vec<SensorTrace>, HarnessError> {
    (0..count)
        .map(|k| {
            let s = seeds::derive(seed, ns, &[u64::from(object.id), action_index as u64, k as u64]);
            Ok(sim.simulate(object, action, s)?)
        })
        .collect()
}

/// Test traces for every (new object, action), from the `Test` seed
/// namespace of `seed`.
pub fn build_test_set(loaded: &LoadedConfig, seed: u64) -> Result<TestSet, HarnessError> {
    let sim = Simulator::from_catalog(&loaded.catalog);
    let mut pairs = Vec::new();
    for (a, action) in loaded.config.action_specs().iter().enumerate() {
        let n = loaded.config.test_count(action);
        for obj in new_objects(loaded) {
            pairs.push(TestPair {
                action: action.name.clone(),
                object: obj.id,
                traces: traces(&sim, &obj, action, a, n, seed, Namespace::Test)?,
            });
        }
    }
    let set = TestSet { pairs };
    if set.is_empty() {
        return Err(HarnessError::EmptyTestSet);
    }
    Ok(set)
}

/// Everything a trial's arms share.
pub struct TrialSetup {
    pub simulator: Simulator,
    pub featurizer: Featurizer,
    pub prior: PriorKnowledge,
    pub prior_groups: BTreeMap<String, Groups>,
    pub test: BTreeMap<String, Vec<FeatureObservation>>,
    pub settings: TransferSettings,
}

pub fn trial_optimizer(cfg: &ExperimentConfig, seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        seed: seeds::derive(seed, Namespace::Optimizer, &[cfg.optimizer.seed]),
        ..cfg.optimizer.clone()
    }
}

/// Simulates the prior pool, fits the feature pipeline, builds the prior
/// models (when the mode transfers) and featurizes the test set.
pub fn prepare_trial(loaded: &LoadedConfig, seed: u64) -> Result<TrialSetup, HarnessError> {
    let cfg = &loaded.config;
    let simulator = Simulator::from_catalog(&loaded.catalog);
    let actions = cfg.action_specs();
    let priors: Vec<ObjectSpec> = cfg
        .prior_objects
        .iter()
        .map(|id| loaded.catalog.object(*id).expect("validated object").clone())
        .collect();
    let mut featurizer = Featurizer::new();
    let mut prior_traces: BTreeMap<String, Vec<(u32, Vec<SensorTrace>)>> = BTreeMap::new();
    for (a, action) in actions.iter().enumerate() {
        let pool: Vec<SensorTrace> = if priors.is_empty() {
            let mut pool = Vec::new();
            for obj in new_objects(loaded) {
                pool.extend(traces(&simulator, &obj, action, a, cfg.calibration_samples, seed, Namespace::Calibration)?);
            }
            pool
        } else {
            let mut per = Vec::new();
            for obj in &priors {
                per.push((obj.id, traces(&simulator, obj, action, a, cfg.prior_samples, seed, Namespace::Prior)?));
            }
            let pool = per.iter().flat_map(|(_, t)| t.iter().cloned()).collect();
            prior_traces.insert(action.name.clone(), per);
            pool
        };
        featurizer.fit_action(&action.name, action.kind(), &pool)?;
    }
    let mut prior_groups = BTreeMap::new();
    for (action, per) in &prior_traces {
        let mut groups = Vec::new();
        for (id, ts) in per {
            let obs = ts
                .iter()
                .map(|t| featurizer.observe(action, t, Some(*id)))
                .collect::<Result<Vec<_>, _>>()?;
            groups.push((*id, obs));
        }
        prior_groups.insert(action.clone(), groups);
    }
    let optimizer = trial_optimizer(cfg, seed);
    let prior = if matches!(cfg.mode, Mode::Transfer | Mode::NegativeTransfer) {
        PriorKnowledge::build(prior_groups.clone(), &optimizer)?
    } else {
        PriorKnowledge::empty()
    };
    let mut test: BTreeMap<String, Vec<FeatureObservation>> = BTreeMap::new();
    for pair in build_test_set(loaded, seed)?.pairs {
        let entry = test.entry(pair.action.clone()).or_default();
        for t in &pair.traces {
            entry.push(featurizer.observe(&pair.action, t, Some(pair.object))?);
        }
    }
    let settings = TransferSettings {
        epsilon_neg1: cfg.epsilon_neg1,
        epsilon_neg2: cfg.epsilon_neg2,
        method: cfg.selection,
        optimizer,
    };
    Ok(TrialSetup {
        simulator,
        featurizer,
        prior,
        prior_groups,
        test,
        settings,
    })
}

fn failed_arm(mode: &str, e: impl std::fmt::Display) -> ArmResult {
    ArmResult {
        mode: mode.to_string(),
        x: Vec::new(),
        curve: Vec::new(),
        initial_accuracy: None,
        stopped_early: false,
        log: Vec::new(),
        final_decisions: Vec::new(),
        final_weights: Vec::new(),
        error: Some(e.to_string()),
    }
}

fn run_arm(mode: &str, loaded: &LoadedConfig, setup: &TrialSetup, prior: &PriorKnowledge, seed: u64) -> ArmResult {
    let cfg = &loaded.config;
    let world = World {
        simulator: &setup.simulator,
        featurizer: &setup.featurizer,
        prior,
        settings: &setup.settings,
    };
    let mut state = match ExplorationState::initialize(cfg.action_specs(), new_objects(loaded), &world, seed, cfg.epsilon_explore) {
        Ok(s) => s,
        Err(e) => return failed_arm(mode, format!("initialization: {e}")),
    };
    let mut evaluator = Evaluator::new(setup.test.clone());
    let out = run_loop(&mut state, &world, cfg.budget, cfg.stopping, &mut evaluator);
    ArmResult {
        mode: mode.to_string(),
        x: (1..=out.curve.len()).collect(),
        curve: out.curve,
        initial_accuracy: out.error.is_none().then_some(out.initial_accuracy),
        stopped_early: out.stopped_early,
        log: out.log,
        final_decisions: state.decisions(),
        final_weights: state.weights(),
        error: out.error,
    }
}

fn run_ablation(loaded: &LoadedConfig, setup: &TrialSetup, seed: u64) -> Result<Vec<ArmResult>, HarnessError> {
    let cfg = &loaded.config;
    let max = cfg.ablation_sizes.iter().copied().max().unwrap_or(0);
    let mut per_arm: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for (a, action) in cfg.action_specs().iter().enumerate() {
        let mut train: Groups = Vec::new();
        for obj in new_objects(loaded) {
            let obs = traces(&setup.simulator, &obj, action, a, max, seed, Namespace::Ablation)?
                .iter()
                .map(|t| setup.featurizer.observe(&action.name, t, Some(obj.id)))
                .collect::<Result<Vec<_>, _>>()?;
            train.push((obj.id, obs));
        }
        let scores = modality_ablation(&train, &setup.test[&action.name], &cfg.ablation_sizes, &setup.settings.optimizer)?;
        for (arm, curve) in scores {
            per_arm.entry(arm).or_default().push(curve);
        }
    }
    Ok(per_arm
        .into_iter()
        .map(|(arm, curves)| {
            let n = curves.len() as f64;
            let curve = (0..cfg.ablation_sizes.len())
                .map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / n)
                .collect();
            ArmResult {
                mode: arm,
                x: cfg.ablation_sizes.clone(),
                curve,
                initial_accuracy: None,
                stopped_early: false,
                log: Vec::new(),
                final_decisions: Vec::new(),
                final_weights: Vec::new(),
                error: None,
            }
        })
        .collect())
}

/// One trial: both arms of a transfer comparison start from the same seed,
/// so they share initial observations, exploration draws and acquisition
/// streams.
pub fn run_trial(loaded: &LoadedConfig, seed: u64) -> TrialResult {
    let setup = match prepare_trial(loaded, seed) {
        Ok(s) => s,
        Err(e) => {
            return TrialResult {
                seed,
                arms: Vec::new(),
                error: Some(e.to_string()),
            }
        }
    };
    let mode = loaded.config.mode;
    let arms = match mode {
        Mode::Transfer | Mode::NegativeTransfer => vec![
            run_arm(&mode.to_string(), loaded, &setup, &setup.prior, seed),
            run_arm(NO_TRANSFER, loaded, &setup, &PriorKnowledge::empty(), seed),
        ],
        Mode::NoTransfer => vec![run_arm(NO_TRANSFER, loaded, &setup, &PriorKnowledge::empty(), seed)],
        Mode::MultiKernelAblation => match run_ablation(loaded, &setup, seed) {
            Ok(arms) => arms,
            Err(e) => vec![failed_arm("MultiKernelAblation", e)],
        },
    };
    TrialResult { seed, arms, error: None }
}

/// Element-wise mean of each arm's curves over successful trials.
pub fn mean_curves(trials: &[TrialResult]) -> BTreeMap<String, Vec<f64>> {
    let mut sums: BTreeMap<String, Vec<(f64, usize)>> = BTreeMap::new();
    for arm in trials.iter().filter(|t| !t.failed()).flat_map(|t| &t.arms) {
        let acc = sums.entry(arm.mode.clone()).or_default();
        if acc.len() < arm.curve.len() {
            acc.resize(arm.curve.len(), (0.0, 0));
        }
        for (slot, v) in acc.iter_mut().zip(&arm.curve) {
            slot.0 += v;
            slot.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(k, v)| (k, v.into_iter().map(|(s, n)| s / n as f64).collect()))
        .collect()
}

/// Runs every trial, at most `jobs` at a time.
pub fn run_experiment(loaded: &LoadedConfig, jobs: usize) -> Result<RunResult, HarnessError> {
    loaded.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    let mut trials: Vec<TrialResult> = pool.install(|| loaded.config.seeds.par_iter().map(|s| run_trial(loaded, *s)).collect());
    trials.sort_by_key(|t| t.seed);
    let failures = trials.iter().filter(|t| t.failed()).count();
    Ok(RunResult {
        config_hash: loaded.config.hash(),
        config: loaded.config.clone(),
        mean_curves: mean_curves(&trials),
        trials,
        failures,
        wall_clock_s: start.elapsed().as_secs_f64(),
    })
}
