//! Instance transfer from old objects: choose the most related old object
//! for a new object under one action, estimate the relatedness `ρ`, and fit
//! the new object's binary model on a dependent kernel that pools the two.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureObservation, Modality};
use crate::gp::{
    argmax_lowest, gpc_fit_with, optimize_hyperparams, BinaryGpcModel, Covariance, GpError, GpcObjective, OvaGpcModel,
    OptimizerConfig,
};
use crate::kernels::{CombinedKernel, DistanceCache, RbfKernel};
use crate::seeds::{self, Namespace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error("no prior knowledge for action {0}")]
    MissingPrior(String),
    #[error("threshold {name} = {value} outside [0.5, 1]")]
    Threshold { name: &'static str, value: f64 },
    #[error("no observations of new object {0}")]
    NoObservations(u32),
    #[error("action {action}, object {object}: {source}")]
    Fit {
        action: String,
        object: u32,
        source: GpError,
    },
    #[error(transparent)]
    Gp(#[from] GpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectionMethod {
    ModelPrediction,
    ModelOptimization,
}

/// Observations grouped by object id, in ascending id order.
pub type Groups = Vec<(u32, Vec<FeatureObservation>)>;

/// Old-object knowledge for one action: the stored instances and the OVA
/// model fitted on exactly those instances.
#[derive(Debug, Clone)]
pub struct PriorAction {
    pub groups: Groups,
    pub model: OvaGpcModel,
}

impl PriorAction {
    pub fn instances(&self, object: u32) -> Option<&[FeatureObservation]> {
        self.groups.iter().find(|(o, _)| *o == object).map(|(_, g)| g.as_slice())
    }
}

/// Per-action prior knowledge. Read-only once built.
#[derive(Debug, Clone, Default)]
pub struct PriorKnowledge {
    actions: BTreeMap<String, PriorAction>,
}

impl PriorKnowledge {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Fits one OVA model per action over the old objects' observations.
    pub fn build(per_action: BTreeMap<String, Groups>, optimizer: &OptimizerConfig) -> Result<Self, TransferError> {
        let mut actions = BTreeMap::new();
        for (action, mut groups) in per_action {
            groups.sort_by_key(|(o, _)| *o);
            if groups.is_empty() {
                continue;
            }
            let x: Vec<FeatureObservation> = groups.iter().flat_map(|(_, g)| g.iter().cloned()).collect();
            let owner: Vec<u32> = groups.iter().flat_map(|(o, g)| std::iter::repeat_n(*o, g.len())).collect();
            let mut models = Vec::with_capacity(groups.len());
            for (o, _) in &groups {
                let y: Vec<f64> = owner.iter().map(|w| if w == o { 1.0 } else { -1.0 }).collect();
                let cfg = OptimizerConfig {
                    seed: seeds::derive(optimizer.seed, Namespace::Optimizer, &[u64::from(*o), 1]),
                    ..optimizer.clone()
                };
                let m = fit_optimized(&x, &y, 0, None, &cfg).map_err(|e| TransferError::Fit {
                    action: action.clone(),
                    object: *o,
                    source: e,
                })?;
                models.push(m);
            }
            let model = OvaGpcModel::from_models(groups.iter().map(|(o, _)| *o).collect(), models)?;
            actions.insert(action, PriorAction { groups, model });
        }
        Ok(Self { actions })
    }

    pub fn action(&self, action: &str) -> Option<&PriorAction> {
        self.actions.get(action)
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn actions(&self) -> impl Iterator<Item = &str> {
        self.actions.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferDecision {
    pub action: String,
    pub new_object: u32,
    pub selected: Option<u32>,
    pub rho: f64,
    pub method: SelectionMethod,
    /// `p̄` of the best old object (prediction method) or its fitted `ρ`
    /// (optimization method)
    pub mean_prediction: f64,
    /// score of every old object, in id order
    pub scores: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSettings {
    pub epsilon_neg1: f64,
    pub epsilon_neg2: f64,
    pub method: SelectionMethod,
    pub optimizer: OptimizerConfig,
}

impl Default for TransferSettings {
    fn default() -> Self {
        Self {
            epsilon_neg1: 0.6,
            epsilon_neg2: 0.6,
            method: SelectionMethod::ModelPrediction,
            optimizer: OptimizerConfig::default(),
        }
    }
}

fn check_threshold(name: &'static str, value: f64) -> Result<(), TransferError> {
    if value.is_finite() && (0.5..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(TransferError::Threshold { name, value })
    }
}

/// Deterministic starting kernel: per-modality median pairwise distance as
/// the length scale, unit amplitude, uniform weights.
pub fn initial_kernel(modalities: &[Modality], cache: &DistanceCache, cfg: &OptimizerConfig) -> CombinedKernel {
    let parts = modalities
        .iter()
        .enumerate()
        .map(|(p, m)| {
            let l = cache
                .median_distance(p)
                .unwrap_or(1.0)
                .clamp(cfg.length_bounds.0, cfg.length_bounds.1);
            (*m, RbfKernel { length_scale: l, signal_variance: 1.0 })
        })
        .collect();
    CombinedKernel::uniform(parts)
}

/// Optimizes kernel hyperparameters (and `ρ` if `rho` is `None` and the
/// config frees it) and fits the binary model on `x`, whose first `n_old`
/// points are old-object instances.
fn fit_optimized(
    x: &[FeatureObservation],
    y: &[f64],
    n_old: usize,
    rho: Option<f64>,
    cfg: &OptimizerConfig,
) -> Result<BinaryGpcModel, GpError> {
    let modalities = x[0].modalities();
    let objective = GpcObjective::new(&modalities, x, y, n_old)?;
    let start = initial_kernel(&modalities, objective.cache(), cfg);
    let cfg = OptimizerConfig {
        optimize_rho: n_old > 0 && rho.is_none(),
        ..cfg.clone()
    };
    let start_rho = rho.unwrap_or(0.5);
    let best = optimize_hyperparams(&objective, &start, start_rho, &cfg)?;
    let cov = if n_old == 0 {
        Covariance::plain(best.kernel)
    } else {
        Covariance::dependent(best.kernel, n_old, rho.unwrap_or(best.rho))?
    };
    gpc_fit_with(cov, x, y)
}

fn labelled(old: &[FeatureObservation], pos: &[FeatureObservation], rest: &[FeatureObservation]) -> (Vec<FeatureObservation>, Vec<f64>) {
    let x: Vec<FeatureObservation> = old.iter().chain(pos).chain(rest).cloned().collect();
    let y: Vec<f64> = std::iter::repeat_n(1.0, old.len() + pos.len())
        .chain(std::iter::repeat_n(-1.0, rest.len()))
        .collect();
    (x, y)
}

/// Binary model for new object `j` with `x_old` pooled through `ρ`:
/// training order is `[x_old (+1), x_new (+1), x_rest (-1)]`.
pub fn fit_dependent_gpc(
    x_old: &[FeatureObservation],
    x_new: &[FeatureObservation],
    x_rest: &[FeatureObservation],
    kernel: &CombinedKernel,
    rho: f64,
) -> Result<BinaryGpcModel, GpError> {
    let (x, y) = labelled(x_old, x_new, x_rest);
    gpc_fit_with(Covariance::dependent(kernel.clone(), x_old.len(), rho)?, &x, &y)
}

/// Picks the old object whose model gives the highest mean posterior over
/// `x_new`; selected only if that mean reaches `epsilon_neg1`.
pub fn select_prior_by_prediction(
    prior: &PriorKnowledge,
    action: &str,
    new_object: u32,
    x_new: &[FeatureObservation],
    epsilon_neg1: f64,
) -> Result<TransferDecision, TransferError> {
    check_threshold("epsilon_neg1", epsilon_neg1)?;
    if x_new.is_empty() {
        return Err(TransferError::NoObservations(new_object));
    }
    let pa = prior
        .action(action)
        .ok_or_else(|| TransferError::MissingPrior(action.to_string()))?;
    let mut mean = vec![0.0; pa.model.classes.len()];
    for q in x_new {
        for (m, p) in mean.iter_mut().zip(pa.model.probabilities(q)?) {
            *m += p;
        }
    }
    mean.iter_mut().for_each(|m| *m /= x_new.len() as f64);
    let best = argmax_lowest(&pa.model.classes, &mean);
    let p_bar = mean[best];
    let selected = (p_bar >= epsilon_neg1).then_some(pa.model.classes[best]);
    Ok(TransferDecision {
        action: action.to_string(),
        new_object,
        selected,
        rho: if selected.is_some() { p_bar } else { 0.0 },
        method: SelectionMethod::ModelPrediction,
        mean_prediction: p_bar,
        scores: pa.model.classes.iter().copied().zip(mean).collect(),
    })
}

/// Fits a dependent model with free `ρ` against every old object and picks
/// the largest fitted `ρ`; selected only if it reaches `epsilon_neg2`.
/// Also returns the winning fitted model.
pub fn select_prior_by_optimization(
    prior: &PriorKnowledge,
    action: &str,
    new_object: u32,
    x_new: &[FeatureObservation],
    x_rest: &[FeatureObservation],
    epsilon_neg2: f64,
    optimizer: &OptimizerConfig,
) -> Result<(TransferDecision, Option<BinaryGpcModel>), TransferError> {
    check_threshold("epsilon_neg2", epsilon_neg2)?;
    if x_new.is_empty() {
        return Err(TransferError::NoObservations(new_object));
    }
    let pa = prior
        .action(action)
        .ok_or_else(|| TransferError::MissingPrior(action.to_string()))?;
    let mut scores = Vec::with_capacity(pa.groups.len());
    let mut best: Option<(usize, BinaryGpcModel)> = None;
    for (i, (old, x_old)) in pa.groups.iter().enumerate() {
        let (x, y) = labelled(x_old, x_new, x_rest);
        let cfg = OptimizerConfig {
            seed: seeds::derive(optimizer.seed, Namespace::Optimizer, &[u64::from(new_object), u64::from(*old), 2]),
            ..optimizer.clone()
        };
        let m = fit_optimized(&x, &y, x_old.len(), None, &cfg)?;
        scores.push((*old, m.cov.rho));
        if best.as_ref().is_none_or(|(b, _)| m.cov.rho > scores[*b].1) {
            best = Some((i, m));
        }
    }
    let (bi, model) = best.expect("prior has at least one object");
    let rho = scores[bi].1;
    let selected = (rho >= epsilon_neg2).then_some(scores[bi].0);
    let decision = TransferDecision {
        action: action.to_string(),
        new_object,
        selected,
        rho: if selected.is_some() { rho } else { 0.0 },
        method: SelectionMethod::ModelOptimization,
        mean_prediction: rho,
        scores,
    };
    Ok((decision, selected.map(|_| model)))
}

/// Models for one action: one binary model per new object (in id order) and
/// the decisions taken (empty when there is no prior knowledge).
#[derive(Debug, Clone)]
pub struct ActionModels {
    pub ova: OvaGpcModel,
    pub decisions: Vec<TransferDecision>,
}

/// No-transfer binary model for `pos` against `rest`.
pub fn fit_plain(
    pos: &[FeatureObservation],
    rest: &[FeatureObservation],
    object: u32,
    optimizer: &OptimizerConfig,
) -> Result<BinaryGpcModel, GpError> {
    let (x, y) = labelled(&[], pos, rest);
    let cfg = OptimizerConfig {
        seed: seeds::derive(optimizer.seed, Namespace::Optimizer, &[u64::from(object), 0]),
        ..optimizer.clone()
    };
    fit_optimized(&x, &y, 0, None, &cfg)
}

/// Builds the new-object models of one action, transferring from `prior`
/// when it holds knowledge of that action.
pub fn build_action_models(
    prior: &PriorKnowledge,
    action: &str,
    groups: &Groups,
    settings: &TransferSettings,
) -> Result<ActionModels, TransferError> {
    let mut models = Vec::with_capacity(groups.len());
    let mut decisions = Vec::new();
    let prior_action = prior.action(action);
    for (j, (object, pos)) in groups.iter().enumerate() {
        if pos.is_empty() {
            return Err(TransferError::NoObservations(*object));
        }
        let rest: Vec<FeatureObservation> = groups
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .flat_map(|(_, (_, g))| g.iter().cloned())
            .collect();
        let wrap = |e: GpError| TransferError::Fit {
            action: action.to_string(),
            object: *object,
            source: e,
        };
        let model = match prior_action {
            None => fit_plain(pos, &rest, *object, &settings.optimizer).map_err(wrap)?,
            Some(pa) => {
                let (decision, fitted) = match settings.method {
                    SelectionMethod::ModelPrediction => (
                        select_prior_by_prediction(prior, action, *object, pos, settings.epsilon_neg1)?,
                        None,
                    ),
                    SelectionMethod::ModelOptimization => select_prior_by_optimization(
                        prior,
                        action,
                        *object,
                        pos,
                        &rest,
                        settings.epsilon_neg2,
                        &settings.optimizer,
                    )?,
                };
                let model = match (decision.selected, fitted) {
                    (None, _) => fit_plain(pos, &rest, *object, &settings.optimizer).map_err(wrap)?,
                    (Some(_), Some(m)) => m,
                    (Some(old), None) => {
                        let x_old = pa.instances(old).expect("selected prior exists");
                        let (x, y) = labelled(x_old, pos, &rest);
                        let cfg = OptimizerConfig {
                            seed: seeds::derive(settings.optimizer.seed, Namespace::Optimizer, &[u64::from(*object), 3]),
                            ..settings.optimizer.clone()
                        };
                        fit_optimized(&x, &y, x_old.len(), Some(decision.rho), &cfg).map_err(wrap)?
                    }
                };
                decisions.push(decision);
                model
            }
        };
        models.push(model);
    }
    let ova = OvaGpcModel::from_models(groups.iter().map(|(o, _)| *o).collect(), models)?;
    Ok(ActionModels { ova, decisions })
}

/// Builds models for every action in `x_new`. Decisions are returned in
/// action order, then new-object order.
pub fn build_new_observation_models(
    prior: &PriorKnowledge,
    x_new: &BTreeMap<String, Groups>,
    settings: &TransferSettings,
) -> Result<(BTreeMap<String, OvaGpcModel>, Vec<TransferDecision>), TransferError> {
    let mut models = BTreeMap::new();
    let mut log = Vec::new();
    for (action, groups) in x_new {
        let built = build_action_models(prior, action, groups, settings)?;
        models.insert(action.clone(), built.ova);
        log.extend(built.decisions);
    }
    Ok((models, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::gpc_fit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn p(v: f64, o: u32) -> FeatureObservation {
        FeatureObservation::single("A", Modality::Force, vec![v], Some(o))
    }

    fn cluster(rng: &mut ChaCha8Rng, center: f64, sd: f64, n: usize, o: u32) -> Vec<FeatureObservation> {
        (0..n)
            .map(|_| p(center + sd * rng.sample::<f64, _>(StandardNormal), o))
            .collect()
    }

    fn quick() -> OptimizerConfig {
        OptimizerConfig {
            restarts: 1,
            max_evals: 40,
            ..OptimizerConfig::default()
        }
    }

    fn prior_at(rng: &mut ChaCha8Rng, centers: &[(u32, f64)]) -> PriorKnowledge {
        let groups: Groups = centers.iter().map(|(o, c)| (*o, cluster(rng, *c, 0.2, 10, *o))).collect();
        PriorKnowledge::build(BTreeMap::from([("A".to_string(), groups)]), &quick()).unwrap()
    }

    fn k() -> CombinedKernel {
        CombinedKernel::single(Modality::Force, RbfKernel::new(0.5, 2.0).unwrap())
    }

    #[test]
    fn threshold_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prior = prior_at(&mut rng, &[(1, 0.0), (2, 3.0)]);
        let far = vec![p(1e4, 11)];
        let d = select_prior_by_prediction(&prior, "A", 11, &far, 0.6).unwrap();
        assert_eq!(d.selected, None);
        assert_eq!(d.rho, 0.0);
        assert!(select_prior_by_prediction(&prior, "A", 11, &far, 0.4).is_err());
        assert!(matches!(
            select_prior_by_prediction(&prior, "B", 11, &far, 0.6),
            Err(TransferError::MissingPrior(_))
        ));
        // exactly 0.5 passes a threshold of 0.5
        let d = select_prior_by_prediction(&prior, "A", 11, &far, 0.5).unwrap();
        assert_eq!(d.mean_prediction, 0.5);
        assert_eq!(d.selected, Some(1));
        assert_eq!(d.rho, 0.5);
    }

    #[test]
    fn spread_observations_select_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let prior = prior_at(&mut rng, &[(1, 0.0), (2, 3.0), (3, 6.0)]);
        // the new data is spread evenly over all three old objects
        let mixed: Vec<_> = [0.0, 3.0, 6.0, 0.05, 2.95, 5.95].iter().map(|v| p(*v, 11)).collect();
        let d = select_prior_by_prediction(&prior, "A", 11, &mixed, 0.6).unwrap();
        assert!(d.scores.iter().all(|(_, s)| *s <= 0.4), "{:?}", d.scores);
        assert_eq!(d.selected, None);
        assert_eq!(d.rho, 0.0);
    }

    #[test]
    fn twin_is_selected() {
        let mut hits = 0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let prior = prior_at(&mut rng, &[(1, 0.0), (2, 2.0), (3, 4.0)]);
            let x_new = cluster(&mut rng, 2.0, 0.2, 3, 11);
            let d = select_prior_by_prediction(&prior, "A", 11, &x_new, 0.6).unwrap();
            if d.selected == Some(2) && d.rho > 0.6 {
                hits += 1;
            }
        }
        assert!(hits >= 18, "{hits}");
    }

    #[test]
    fn rho_limits_of_dependent_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let old = cluster(&mut rng, 0.0, 0.3, 6, 1);
        let new = cluster(&mut rng, 0.0, 0.3, 3, 11);
        let rest = cluster(&mut rng, 2.0, 0.3, 4, 12);

        let one = fit_dependent_gpc(&old, &new, &rest, &k(), 1.0).unwrap();
        let x: Vec<_> = old.iter().chain(&new).chain(&rest).cloned().collect();
        let y: Vec<f64> = (0..13).map(|i| if i < 9 { 1.0 } else { -1.0 }).collect();
        let pooled = gpc_fit(&k(), &x, &y).unwrap();

        let zero = fit_dependent_gpc(&old, &new, &rest, &k(), 0.0).unwrap();
        let xn: Vec<_> = new.iter().chain(&rest).cloned().collect();
        let alone = gpc_fit(&k(), &xn, &y[6..]).unwrap();
        for q in [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0] {
            let qo = p(q, 0);
            assert!((one.predict(&qo).unwrap() - pooled.predict(&qo).unwrap()).abs() < 1e-9);
            assert!((zero.predict(&qo).unwrap() - alone.predict(&qo).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn posterior_at_center_grows_with_rho() {
        // classes centred at 4.5, 5.0, 5.5 with the old twin of 5.0
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let old = cluster(&mut rng, 5.0, 0.15, 12, 1);
        let new = cluster(&mut rng, 5.0, 0.15, 4, 11);
        let rest: Vec<_> = cluster(&mut rng, 4.5, 0.15, 4, 12)
            .into_iter()
            .chain(cluster(&mut rng, 5.5, 0.15, 4, 13))
            .collect();
        let kern = CombinedKernel::single(Modality::Force, RbfKernel::new(0.2, 3.0).unwrap());
        let mut last = 0.0;
        for rho in [0.0, 0.5, 1.0] {
            let m = fit_dependent_gpc(&old, &new, &rest, &kern, rho).unwrap();
            let v = m.predict(&p(5.0, 0)).unwrap();
            assert!(v >= last, "rho {rho}: {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn optimization_selection_on_identical_distributions() {
        let mut hits = 0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
            let old = cluster(&mut rng, 0.0, 0.3, 30, 1);
            let groups: Groups = vec![(1, old)];
            let prior = PriorKnowledge::build(BTreeMap::from([("A".to_string(), groups)]), &quick()).unwrap();
            let x_new = cluster(&mut rng, 0.0, 0.3, 30, 11);
            let rest = cluster(&mut rng, 2.0, 0.3, 30, 12);
            let (d, m) = select_prior_by_optimization(&prior, "A", 11, &x_new, &rest, 0.6, &quick()).unwrap();
            if d.rho >= 0.8 {
                hits += 1;
            }
            assert_eq!(m.is_some(), d.selected.is_some());
        }
        assert!(hits >= 16, "{hits}");
    }

    #[test]
    fn optimization_selection_with_one_new_observation_completes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let prior = prior_at(&mut rng, &[(1, 0.0), (2, 3.0)]);
        let rest = cluster(&mut rng, 6.0, 0.3, 5, 12);
        let (d, _) = select_prior_by_optimization(&prior, "A", 11, &[p(0.1, 11)], &rest, 0.6, &quick()).unwrap();
        assert!((0.0..=1.0).contains(&d.rho));
        // a threshold above every fitted rho rejects
        let (d, m) = select_prior_by_optimization(&prior, "A", 11, &[p(0.1, 11)], &rest, 1.0, &quick()).unwrap();
        if d.scores.iter().all(|(_, r)| *r < 1.0) {
            assert_eq!(d.selected, None);
            assert!(m.is_none());
        }
    }

    #[test]
    fn empty_prior_equals_plain_fits() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let groups: Groups = vec![(11, cluster(&mut rng, 0.0, 0.3, 3, 11)), (12, cluster(&mut rng, 1.0, 0.3, 3, 12))];
        let x_new = BTreeMap::from([("A".to_string(), groups.clone())]);
        let settings = TransferSettings {
            optimizer: quick(),
            ..TransferSettings::default()
        };
        let (models, log) = build_new_observation_models(&PriorKnowledge::empty(), &x_new, &settings).unwrap();
        assert!(log.is_empty());
        let rest: Vec<_> = groups[1].1.clone();
        let plain = fit_plain(&groups[0].1, &rest, 11, &quick()).unwrap();
        let q = p(0.3, 0);
        assert_eq!(models["A"].models[0].predict(&q).unwrap(), plain.predict(&q).unwrap());
    }

    #[test]
    fn log_has_one_entry_per_action_and_object() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let old: Groups = vec![(1, cluster(&mut rng, 0.0, 0.2, 8, 1))];
        let per_action: BTreeMap<String, Groups> = ["A", "B"].iter().map(|a| (a.to_string(), old.clone())).collect();
        let prior = PriorKnowledge::build(per_action, &quick()).unwrap();
        let groups: Groups = (0..3).map(|j| (11 + j, cluster(&mut rng, j as f64, 0.2, 2, 11 + j))).collect();
        let x_new: BTreeMap<String, Groups> = ["A", "B"].iter().map(|a| (a.to_string(), groups.clone())).collect();
        let settings = TransferSettings {
            optimizer: quick(),
            ..TransferSettings::default()
        };
        let (models, log) = build_new_observation_models(&prior, &x_new, &settings).unwrap();
        assert_eq!(log.len(), 6);
        assert_eq!(models.len(), 2);
        assert!(log.iter().all(|d| (0.0..=1.0).contains(&d.rho)));
        // the twin of old object 1 sits at 0.0
        assert_eq!(log[0].selected, Some(1));
    }
}
