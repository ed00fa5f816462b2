//! Trace-to-observation pipeline with per-action frozen state.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{extract_stiffness, extract_texture, extract_thermal, FeatureError, FeatureObservation, Modality, ThermalProjector};
use crate::signals::{ActionKind, SensorTrace};

/// Affine normalization of one segment: `(x - shift) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentScale {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl SegmentScale {
    pub fn identity(dim: usize) -> Self {
        Self {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Per-dimension z-score.
    pub fn standardize(rows: &[Vec<f64>]) -> Self {
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let shift: Vec<f64> = (0..dim).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..dim)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - shift[j]).powi(2)).sum::<f64>() / n;
                positive_or_one(var.sqrt())
            })
            .collect();
        Self { shift, scale }
    }

    /// One common scale for every dimension: the root of the total variance.
    /// Keeps relative magnitudes of principal coordinates intact.
    pub fn isotropic(rows: &[Vec<f64>]) -> Self {
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let shift: Vec<f64> = (0..dim).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let total: f64 = (0..dim)
            .map(|j| rows.iter().map(|r| (r[j] - shift[j]).powi(2)).sum::<f64>() / n)
            .sum();
        let s = positive_or_one(total.sqrt());
        Self {
            shift,
            scale: vec![s; dim],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

fn positive_or_one(s: f64) -> f64 {
    if s.is_finite() && s > 1e-300 {
        s
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub segments: Vec<(Modality, SegmentScale)>,
}

impl FeatureScaler {
    pub fn apply(&self, segments: Vec<(Modality, Vec<f64>)>) -> Vec<(Modality, Vec<f64>)> {
        segments
            .into_iter()
            .map(|(m, v)| match self.segments.iter().find(|(sm, _)| *sm == m) {
                Some((_, s)) => (m, s.apply(&v)),
                None => (m, v),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ActionState {
    kind: ActionKind,
    projector: ThermalProjector,
    scaler: FeatureScaler,
}

/// Frozen per-action feature state: a thermal projector and a scaler, both
/// fitted once on a pool of traces and shared read-only afterwards.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Featurizer {
    actions: BTreeMap<String, ActionState>,
}

fn raw_segments(
    kind: ActionKind,
    trace: &SensorTrace,
    projector: &ThermalProjector,
) -> Result<Vec<(Modality, Vec<f64>)>, FeatureError> {
    let first = match kind {
        ActionKind::Pressing | ActionKind::StaticContact => (Modality::Force, vec![extract_stiffness(trace)?]),
        ActionKind::Sliding => (Modality::Texture, extract_texture(trace)?.to_vec()),
    };
    Ok(vec![first, (Modality::Thermal, extract_thermal(trace, projector)?)])
}

impl Featurizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fits state for `action` from `pool`; replaces any previous state.
    pub fn fit_action(&mut self, action: &str, kind: ActionKind, pool: &[SensorTrace]) -> Result<(), FeatureError> {
        let refs: Vec<&SensorTrace> = pool.iter().collect();
        let projector = ThermalProjector::fit(&refs)?;
        let raws = pool
            .iter()
            .map(|t| raw_segments(kind, t, &projector))
            .collect::<Result<Vec<_>, _>>()?;
        let scaler = FeatureScaler {
            segments: (0..raws[0].len())
                .map(|s| {
                    let modality = raws[0][s].0;
                    let rows: Vec<Vec<f64>> = raws.iter().map(|r| r[s].1.clone()).collect();
                    let scale = match modality {
                        Modality::Thermal => SegmentScale::isotropic(&rows),
                        _ => SegmentScale::standardize(&rows),
                    };
                    (modality, scale)
                })
                .collect(),
        };
        self.actions.insert(
            action.to_string(),
            ActionState {
                kind,
                projector,
                scaler,
            },
        );
        Ok(())
    }

    pub fn projector(&self, action: &str) -> Option<&ThermalProjector> {
        self.actions.get(action).map(|s| &s.projector)
    }

    pub fn observe(&self, action: &str, trace: &SensorTrace, object_id: Option<u32>) -> Result<FeatureObservation, FeatureError> {
        let state = self
            .actions
            .get(action)
            .ok_or_else(|| FeatureError::UnknownAction(action.to_string()))?;
        let raw = raw_segments(state.kind, trace, &state.projector)?;
        Ok(FeatureObservation::new(action, state.scaler.apply(raw), object_id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{ExploratoryAction, NoiseScales, ObjectSpec, SensorLayout, Simulator};

    fn obj(id: u32, k: f64) -> ObjectSpec {
        ObjectSpec {
            id,
            label: String::new(),
            stiffness_coeff: k,
            roughness_amp: 0.5 + 0.1 * id as f64,
            roughness_freq: 2.0 + id as f64,
            thermal_time_const: 2.0 + 0.5 * id as f64,
            thermal_equilib_delta: -1.0 - 0.2 * id as f64,
        }
    }

    #[test]
    fn fitted_pool_is_standardized() {
        let sim = Simulator::new(SensorLayout::default(), NoiseScales::default());
        for name in ["P1", "S4"] {
            let a = ExploratoryAction::standard(name).unwrap();
            let pool: Vec<SensorTrace> = (0..24)
                .map(|i| sim.simulate(&obj(1 + i % 4, 0.5 + (i % 4) as f64), &a, i as u64).unwrap())
                .collect();
            let mut f = Featurizer::new();
            f.fit_action(name, a.kind(), &pool).unwrap();
            let obs: Vec<FeatureObservation> = pool.iter().map(|t| f.observe(name, t, None).unwrap()).collect();
            assert!(obs.iter().all(|o| o.is_finite()));
            let first = obs[0].segments[0].0;
            let dim = obs[0].segments[0].1.len();
            for j in 0..dim {
                let vals: Vec<f64> = obs.iter().map(|o| o.segment(first).unwrap()[j]).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
                assert!(mean.abs() < 1e-9 && (var - 1.0).abs() < 1e-9);
            }
            let thermal_total: f64 = (0..10)
                .map(|j| obs.iter().map(|o| o.segment(Modality::Thermal).unwrap()[j].powi(2)).sum::<f64>() / 24.0)
                .sum();
            // projection keeps at most the total variance, scaled to one
            assert!(thermal_total <= 1.0 + 1e-9 && thermal_total > 0.9);
        }
    }

    #[test]
    fn unknown_action_is_an_error() {
        let f = Featurizer::new();
        let t = SensorTrace {
            forces: None,
            temps: nalgebra::DMatrix::zeros(1, 10),
            accels: None,
            sample_rate_hz: 100.0,
        };
        assert!(matches!(f.observe("P1", &t, None), Err(FeatureError::UnknownAction(_))));
    }
}
