//! The exploration loop: score every (action, new object) pair by the mean
//! entropy of its posteriors, pick the next pair ε-greedily, touch the object,
//! and refit the models of the action just executed.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureError, FeatureObservation, Featurizer};
use crate::gp::{GpError, OvaGpcModel};
use crate::seeds::{self, Namespace};
use crate::signals::{ExploratoryAction, ObjectSpec, SignalError, Simulator};
use crate::transfer::{build_action_models, ActionModels, Groups, PriorKnowledge, TransferDecision, TransferError, TransferSettings};

const P_CLIP: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ActiveError {
    #[error("empty probability vector")]
    EmptyPosterior,
    #[error("state invariant violated: {0}")]
    State(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// Shannon entropy in nats of a posterior vector: each entry is clipped to
/// `[1e-9, 1 - 1e-9]` and the vector renormalized first.
pub fn posterior_entropy(probs: &[f64]) -> Result<f64, ActiveError> {
    if probs.is_empty() {
        return Err(ActiveError::EmptyPosterior);
    }
    let clipped: Vec<f64> = probs.iter().map(|p| p.clamp(P_CLIP, 1.0 - P_CLIP)).collect();
    let total: f64 = clipped.iter().sum();
    let h = -clipped
        .iter()
        .map(|p| {
            let q = p / total;
            q * q.ln()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// `UNC[action][object]`, rows in action order, columns in object order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyTable {
    pub actions: Vec<String>,
    pub objects: Vec<u32>,
    pub values: Vec<Vec<f64>>,
}

/// Mean posterior entropy of each group's observations under its action's
/// model.
pub fn uncertainty_table(
    actions: &[String],
    objects: &[u32],
    models: &BTreeMap<String, OvaGpcModel>,
    groups: &BTreeMap<String, Groups>,
) -> Result<UncertaintyTable, ActiveError> {
    let mut values = Vec::with_capacity(actions.len());
    for a in actions {
        let model = models
            .get(a)
            .ok_or_else(|| ActiveError::State(format!("no model for action {a}")))?;
        let g = groups
            .get(a)
            .ok_or_else(|| ActiveError::State(format!("no observations for action {a}")))?;
        let mut row = Vec::with_capacity(objects.len());
        for o in objects {
            let obs = g
                .iter()
                .find(|(id, _)| id == o)
                .map(|(_, v)| v)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| ActiveError::State(format!("no observations of object {o} under {a}")))?;
            let mut total = 0.0;
            for q in obs {
                total += posterior_entropy(&model.probabilities(q)?)?;
            }
            row.push(total / obs.len() as f64);
        }
        values.push(row);
    }
    Ok(UncertaintyTable {
        actions: actions.to_vec(),
        objects: objects.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Explore,
    Exploit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub object: u32,
    /// index into the action list
    pub action: usize,
    pub branch: Branch,
}

/// ε-greedy choice of the next (object, action). Three uniforms are always
/// drawn, so two loops sharing a stream stay aligned whichever branch each
/// takes.
pub fn select_next<R: Rng>(table: &UncertaintyTable, epsilon_explore: f64, rng: &mut R) -> Selection {
    let p_rand: f64 = rng.random();
    let rand_object = rng.random_range(0..table.objects.len());
    let rand_action = rng.random_range(0..table.actions.len());
    if p_rand >= epsilon_explore {
        let mut best = (0, 0);
        for (a, row) in table.values.iter().enumerate() {
            for (o, v) in row.iter().enumerate() {
                if *v > table.values[best.0][best.1] {
                    best = (a, o);
                }
            }
        }
        Selection {
            object: table.objects[best.1],
            action: best.0,
            branch: Branch::Exploit,
        }
    } else {
        Selection {
            object: table.objects[rand_object],
            action: rand_action,
            branch: Branch::Explore,
        }
    }
}

/// Stop once the best accuracy has not risen by more than `min_gain` over
/// the last `window` acquisitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    pub window: usize,
    /// fraction, e.g. 0.005 for half a percentage point
    pub min_gain: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            window: 10,
            min_gain: 0.005,
        }
    }
}

impl StopRule {
    /// `history` starts with the accuracy before the first acquisition.
    pub fn should_stop(&self, history: &[f64]) -> bool {
        if self.window == 0 || history.len() <= self.window {
            return false;
        }
        let split = history.len() - self.window;
        let before = history[..split].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let recent = history[split..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        recent - before <= self.min_gain
    }
}

/// Shared, read-only context of one trial.
pub struct World<'a> {
    pub simulator: &'a Simulator,
    pub featurizer: &'a Featurizer,
    pub prior: &'a PriorKnowledge,
    pub settings: &'a TransferSettings,
}

pub struct ExplorationState {
    pub actions: Vec<ExploratoryAction>,
    /// new objects in id order
    pub objects: Vec<ObjectSpec>,
    pub groups: BTreeMap<String, Groups>,
    pub models: BTreeMap<String, ActionModels>,
    /// acquisitions since initialization
    pub iteration: usize,
    pub epsilon_explore: f64,
    pub accuracy_history: Vec<f64>,
    trial_seed: u64,
    rng: ChaCha8Rng,
    counts: BTreeMap<(u32, usize), u64>,
}

impl ExplorationState {
    /// Touches every new object once with every action and fits the initial
    /// models.
    pub fn initialize(
        actions: Vec<ExploratoryAction>,
        mut objects: Vec<ObjectSpec>,
        world: &World,
        trial_seed: u64,
        epsilon_explore: f64,
    ) -> Result<Self, ActiveError> {
        if actions.is_empty() || objects.is_empty() {
            return Err(ActiveError::State("need at least one action and one new object".into()));
        }
        objects.sort_by_key(|o| o.id);
        let mut state = Self {
            groups: actions
                .iter()
                .map(|a| (a.name.clone(), objects.iter().map(|o| (o.id, Vec::new())).collect()))
                .collect(),
            actions,
            objects,
            models: BTreeMap::new(),
            iteration: 0,
            epsilon_explore,
            accuracy_history: Vec::new(),
            trial_seed,
            rng: seeds::rng(trial_seed, Namespace::Explore, &[]),
            counts: BTreeMap::new(),
        };
        for a in 0..state.actions.len() {
            for o in 0..state.objects.len() {
                let id = state.objects[o].id;
                state.observe(id, a, world)?;
            }
        }
        for a in 0..state.actions.len() {
            state.update_knowledge(a, world)?;
        }
        Ok(state)
    }

    fn observe(&mut self, object: u32, action: usize, world: &World) -> Result<FeatureObservation, ActiveError> {
        let spec = self
            .objects
            .iter()
            .find(|o| o.id == object)
            .ok_or_else(|| ActiveError::State(format!("object {object} is not a new object")))?;
        let act = self
            .actions
            .get(action)
            .ok_or_else(|| ActiveError::State(format!("action index {action} out of range")))?;
        let k = self.counts.entry((object, action)).or_insert(0);
        let seed = seeds::derive(self.trial_seed, Namespace::Train, &[u64::from(object), action as u64, *k]);
        *k += 1;
        let trace = world.simulator.simulate(spec, act, seed)?;
        let obs = world.featurizer.observe(&act.name, &trace, Some(object))?;
        let group = self
            .groups
            .get_mut(&act.name)
            .and_then(|g| g.iter_mut().find(|(o, _)| *o == object))
            .ok_or_else(|| ActiveError::State(format!("missing group ({}, {object})", act.name)))?;
        group.1.push(obs.clone());
        Ok(obs)
    }

    /// Executes `action` on `object` and stores the new observation.
    pub fn acquire(&mut self, object: u32, action: usize, world: &World) -> Result<FeatureObservation, ActiveError> {
        let obs = self.observe(object, action, world)?;
        self.iteration += 1;
        Ok(obs)
    }

    /// Refits only the models of `action`; returns its transfer decisions.
    pub fn update_knowledge(&mut self, action: usize, world: &World) -> Result<Vec<TransferDecision>, ActiveError> {
        let name = self.actions[action].name.clone();
        let built = build_action_models(world.prior, &name, &self.groups[&name], world.settings)?;
        let decisions = built.decisions.clone();
        self.models.insert(name, built);
        Ok(decisions)
    }

    pub fn action_names(&self) -> Vec<String> {
        self.actions.iter().map(|a| a.name.clone()).collect()
    }

    pub fn object_ids(&self) -> Vec<u32> {
        self.objects.iter().map(|o| o.id).collect()
    }

    pub fn ova_models(&self) -> BTreeMap<String, OvaGpcModel> {
        self.models.iter().map(|(a, m)| (a.clone(), m.ova.clone())).collect()
    }

    pub fn uncertainty(&self) -> Result<UncertaintyTable, ActiveError> {
        uncertainty_table(&self.action_names(), &self.object_ids(), &self.ova_models(), &self.groups)
    }

    pub fn group_len(&self, action: &str, object: u32) -> usize {
        self.groups
            .get(action)
            .and_then(|g| g.iter().find(|(o, _)| *o == object))
            .map_or(0, |(_, v)| v.len())
    }

    /// All current transfer decisions, in action then object order.
    pub fn decisions(&self) -> Vec<TransferDecision> {
        self.actions
            .iter()
            .flat_map(|a| self.models.get(&a.name).map(|m| m.decisions.clone()).unwrap_or_default())
            .collect()
    }

    /// Current combination weights per (action, object).
    pub fn weights(&self) -> Vec<(String, u32, Vec<f64>)> {
        let mut out = Vec::new();
        for a in &self.actions {
            if let Some(m) = self.models.get(&a.name) {
                for (c, b) in m.ova.classes.iter().zip(&m.ova.models) {
                    out.push((a.name.clone(), *c, b.cov.kernel.weights.clone()));
                }
            }
        }
        out
    }
}

/// Held-out accuracy of the current models, recomputed only for actions
/// whose models changed.
pub struct Evaluator {
    test: BTreeMap<String, Vec<FeatureObservation>>,
    per_action: BTreeMap<String, f64>,
}

impl Evaluator {
    /// `test` holds labelled observations (`object_id` set) per action.
    pub fn new(test: BTreeMap<String, Vec<FeatureObservation>>) -> Self {
        Self {
            test,
            per_action: BTreeMap::new(),
        }
    }

    fn action_accuracy(&self, action: &str, model: &OvaGpcModel) -> Result<f64, ActiveError> {
        let obs = &self.test[action];
        if obs.is_empty() {
            return Err(ActiveError::State(format!("empty test set for {action}")));
        }
        let mut correct = 0usize;
        for q in obs {
            let (label, _) = model.predict(q)?;
            if Some(label) == q.object_id {
                correct += 1;
            }
        }
        Ok(correct as f64 / obs.len() as f64)
    }

    /// Mean over actions of the fraction of test observations labelled
    /// correctly. `changed = None` recomputes every action.
    pub fn evaluate(&mut self, state: &ExplorationState, changed: Option<&str>) -> Result<f64, ActiveError> {
        for a in &state.actions {
            if !self.test.contains_key(&a.name) {
                return Err(ActiveError::State(format!("no test set for {}", a.name)));
            }
            if changed.is_none() || changed == Some(a.name.as_str()) || !self.per_action.contains_key(&a.name) {
                let acc = self.action_accuracy(&a.name, &state.models[&a.name].ova)?;
                self.per_action.insert(a.name.clone(), acc);
            }
        }
        let n = state.actions.len() as f64;
        Ok(state.actions.iter().map(|a| self.per_action[&a.name]).sum::<f64>() / n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopEntry {
    pub iteration: usize,
    pub object: u32,
    pub action: String,
    pub branch: Branch,
    pub uncertainty: Vec<Vec<f64>>,
    pub decisions: Vec<TransferDecision>,
    /// combination weights of the refitted models, per new object
    pub weights: Vec<(u32, Vec<f64>)>,
    pub accuracy: f64,
}

#[derive(Debug, Default)]
pub struct LoopOutcome {
    /// accuracy after each acquisition
    pub curve: Vec<f64>,
    pub initial_accuracy: f64,
    pub log: Vec<LoopEntry>,
    pub stopped_early: bool,
    pub error: Option<String>,
}

/// Runs up to `budget` acquisitions. On error the partial curve is kept and
/// the error described in `error`.
pub fn run_loop(
    state: &mut ExplorationState,
    world: &World,
    budget: usize,
    stop: Option<StopRule>,
    evaluator: &mut Evaluator,
) -> LoopOutcome {
    let mut out = LoopOutcome::default();
    match evaluator.evaluate(state, None) {
        Ok(acc) => {
            out.initial_accuracy = acc;
            state.accuracy_history = vec![acc];
        }
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    }
    for _ in 0..budget {
        let step = (|| -> Result<LoopEntry, ActiveError> {
            let table = state.uncertainty()?;
            let sel = select_next(&table, state.epsilon_explore, &mut state.rng);
            state.acquire(sel.object, sel.action, world)?;
            let decisions = state.update_knowledge(sel.action, world)?;
            let name = state.actions[sel.action].name.clone();
            let accuracy = evaluator.evaluate(state, Some(&name))?;
            let m = &state.models[&name].ova;
            let weights = m.classes.iter().zip(&m.models).map(|(c, b)| (*c, b.cov.kernel.weights.clone())).collect();
            Ok(LoopEntry {
                iteration: state.iteration,
                object: sel.object,
                action: name,
                branch: sel.branch,
                uncertainty: table.values,
                decisions,
                weights,
                accuracy,
            })
        })();
        match step {
            Ok(entry) => {
                out.curve.push(entry.accuracy);
                state.accuracy_history.push(entry.accuracy);
                out.log.push(entry);
            }
            Err(e) => {
                out.error = Some(format!("iteration {}: {e}", state.iteration + 1));
                break;
            }
        }
        if stop.is_some_and(|r| r.should_stop(&state.accuracy_history)) {
            out.stopped_early = true;
            break;
        }
    }
    out
}
