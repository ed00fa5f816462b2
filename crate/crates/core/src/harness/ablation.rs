//! Single-modality versus combined-kernel comparisons on fixed training sets.

use std::collections::{BTreeMap, BTreeSet};

use crate::features::{FeatureObservation, Modality};
use crate::gp::{OptimizerConfig, OvaGpcModel};
use crate::transfer::{build_action_models, Groups, PriorKnowledge, TransferError, TransferSettings};

pub const COMBINED: &str = "Combined";

/// Keeps only the segment of `modality`. `None` if the observation has no
/// such segment.
pub fn restrict(obs: &FeatureObservation, modality: Modality) -> Option<FeatureObservation> {
    obs.segment(modality)
        .map(|v| FeatureObservation::new(&obs.action, vec![(modality, v.to_vec())], obs.object_id))
}

/// OVA model without transfer, hyperparameters and weights by marginal
/// likelihood.
pub fn fit_ova(train: &Groups, optimizer: &OptimizerConfig) -> Result<OvaGpcModel, TransferError> {
    let action = train
        .iter()
        .flat_map(|(_, g)| g.first())
        .map(|o| o.action.clone())
        .next()
        .unwrap_or_default();
    let settings = TransferSettings {
        optimizer: optimizer.clone(),
        ..TransferSettings::default()
    };
    Ok(build_action_models(&PriorKnowledge::empty(), &action, train, &settings)?.ova)
}

/// Fraction of `test` (labels in `object_id`) the model gets right.
pub fn accuracy(model: &OvaGpcModel, test: &[FeatureObservation]) -> Result<f64, TransferError> {
    if test.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for q in test {
        if Some(model.predict(q)?.0) == q.object_id {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Accuracy per arm (`Combined` plus each modality present) at every
/// training size; size `s` trains on the first `s` observations per object.
pub fn modality_ablation(
    train: &Groups,
    test: &[FeatureObservation],
    sizes: &[usize],
    optimizer: &OptimizerConfig,
) -> Result<BTreeMap<String, Vec<f64>>, TransferError> {
    let modalities: BTreeSet<Modality> = train
        .iter()
        .flat_map(|(_, g)| g.iter().flat_map(|o| o.modalities()))
        .collect();
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &s in sizes {
        let subset: Groups = train.iter().map(|(o, g)| (*o, g.iter().take(s).cloned().collect())).collect();
        let combined = fit_ova(&subset, optimizer)?;
        out.entry(COMBINED.to_string()).or_default().push(accuracy(&combined, test)?);
        for &m in &modalities {
            let only: Groups = subset
                .iter()
                .map(|(o, g)| (*o, g.iter().filter_map(|x| restrict(x, m)).collect()))
                .collect();
            let test_only: Vec<FeatureObservation> = test.iter().filter_map(|x| restrict(x, m)).collect();
            let model = fit_ova(&only, optimizer)?;
            out.entry(m.to_string()).or_default().push(accuracy(&model, &test_only)?);
        }
    }
    Ok(out)
}
