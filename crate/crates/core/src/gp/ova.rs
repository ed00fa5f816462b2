use super::{gpc_fit, BinaryGpcModel, GpError};
use crate::features::FeatureObservation;
use crate::kernels::CombinedKernel;

/// One binary classifier per class; classes are identified by object id.
#[derive(Debug, Clone)]
pub struct OvaGpcModel {
    pub classes: Vec<u32>,
    pub models: Vec<BinaryGpcModel>,
}

/// Index of the largest probability; exact ties go to the lowest class id.
pub fn argmax_lowest(classes: &[u32], probs: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..probs.len() {
        if probs[i] > probs[best] || (probs[i] == probs[best] && classes[i] < classes[best]) {
            best = i;
        }
    }
    best
}

/// Fits one binary model per class, each with the class's observations as
/// positives and all other classes as negatives.
pub fn ova_fit(kernel: &CombinedKernel, groups: &[(u32, Vec<FeatureObservation>)]) -> Result<OvaGpcModel, GpError> {
    if groups.len() < 2 {
        return Err(GpError::Input(format!("need at least 2 classes, got {}", groups.len())));
    }
    if let Some((c, _)) = groups.iter().find(|(_, g)| g.is_empty()) {
        return Err(GpError::Input(format!("class {c} has no observations")));
    }
    let x: Vec<FeatureObservation> = groups.iter().flat_map(|(_, g)| g.iter().cloned()).collect();
    let owner: Vec<u32> = groups.iter().flat_map(|(c, g)| std::iter::repeat_n(*c, g.len())).collect();
    let mut models = Vec::with_capacity(groups.len());
    for (c, _) in groups {
        let y: Vec<f64> = owner.iter().map(|o| if o == c { 1.0 } else { -1.0 }).collect();
        let m = gpc_fit(kernel, &x, &y).map_err(|e| GpError::Class {
            class: *c,
            source: Box::new(e),
        })?;
        models.push(m);
    }
    OvaGpcModel::from_models(groups.iter().map(|(c, _)| *c).collect(), models)
}

impl OvaGpcModel {
    pub fn from_models(classes: Vec<u32>, models: Vec<BinaryGpcModel>) -> Result<Self, GpError> {
        if classes.len() != models.len() || classes.is_empty() {
            return Err(GpError::Input(format!("{} classes for {} models", classes.len(), models.len())));
        }
        Ok(Self { classes, models })
    }

    /// Raw per-class binary posteriors, not renormalized.
    pub fn probabilities(&self, q: &FeatureObservation) -> Result<Vec<f64>, GpError> {
        self.classes
            .iter()
            .zip(&self.models)
            .map(|(c, m)| {
                m.predict(q).map_err(|e| GpError::Class {
                    class: *c,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    pub fn predict(&self, q: &FeatureObservation) -> Result<(u32, Vec<f64>), GpError> {
        let p = self.probabilities(q)?;
        Ok((self.classes[argmax_lowest(&self.classes, &p)], p))
    }
}
