//! Per-modality feature vectors from sensor traces.
//!
//! Pressing and static contact yield a stiffness scalar plus a thermal
//! descriptor; sliding yields a four-component texture descriptor plus a
//! thermal descriptor.

mod hjorth;
mod pipeline;
mod thermal;

pub use hjorth::{activity, complexity, diff, linear_correlation, mobility};
pub use pipeline::{FeatureScaler, Featurizer, SegmentScale};
pub use thermal::{
    extract_thermal, mean_temperature, resample, thermal_profile, ThermalProjector, DEFAULT_RESAMPLE_LEN,
    THERMAL_COMPONENTS,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signals::{ActionKind, SensorTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("sequence of length {len} is too short (need at least {min})")]
    DegenerateSequence { len: usize, min: usize },
    #[error("zero-variance input to {0}")]
    ZeroVariance(&'static str),
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("trace has no {0} channels")]
    MissingModality(Modality),
    #[error("need at least {needed} traces to fit, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("projector expects profiles of length {expected}, got {got}")]
    ProjectorMismatch { expected: usize, got: usize },
    #[error("no featurizer state for action {0}")]
    UnknownAction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    Force,
    Texture,
    Thermal,
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Modality::Force => "force",
            Modality::Texture => "texture",
            Modality::Thermal => "thermal",
        };
        f.write_str(s)
    }
}

/// Modalities and segment dimensions produced by an action kind.
pub fn segment_layout(kind: ActionKind) -> [(Modality, usize); 2] {
    match kind {
        ActionKind::Pressing | ActionKind::StaticContact => {
            [(Modality::Force, 1), (Modality::Thermal, THERMAL_COMPONENTS)]
        }
        ActionKind::Sliding => [(Modality::Texture, 4), (Modality::Thermal, THERMAL_COMPONENTS)],
    }
}

/// A multi-sensor feature vector for one execution of one action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureObservation {
    pub action: String,
    pub segments: Vec<(Modality, Vec<f64>)>,
    pub object_id: Option<u32>,
}

impl FeatureObservation {
    pub fn new(action: &str, segments: Vec<(Modality, Vec<f64>)>, object_id: Option<u32>) -> Self {
        Self {
            action: action.into(),
            segments,
            object_id,
        }
    }

    /// Observation with a single segment; handy for synthetic problems.
    pub fn single(action: &str, modality: Modality, values: Vec<f64>, object_id: Option<u32>) -> Self {
        Self::new(action, vec![(modality, values)], object_id)
    }

    pub fn segment(&self, modality: Modality) -> Option<&[f64]> {
        self.segments
            .iter()
            .find(|(m, _)| *m == modality)
            .map(|(_, v)| v.as_slice())
    }

    pub fn modalities(&self) -> Vec<Modality> {
        self.segments.iter().map(|(m, _)| *m).collect()
    }

    /// All segments concatenated in order.
    pub fn flat(&self) -> Vec<f64> {
        self.segments.iter().flat_map(|(_, v)| v.iter().copied()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.segments.iter().all(|(_, v)| v.iter().all(|x| x.is_finite()))
    }
}

/// Mean normal force over all force sensors and time steps.
pub fn extract_stiffness(trace: &SensorTrace) -> Result<f64, FeatureError> {
    let f = trace
        .forces
        .as_ref()
        .ok_or(FeatureError::MissingModality(Modality::Force))?;
    Ok(f.mean())
}

/// `[Act, Mob, Comp, Lcorr]` of the accelerometer signals.
///
/// The first three statistics are averaged over every axis of every
/// accelerometer; the correlation over the xy, yz and xz pairs of every
/// accelerometer. Constant axes (or pairs involving one) are skipped; the
/// zero-variance error surfaces only if nothing remains to average.
pub fn extract_texture(trace: &SensorTrace) -> Result<[f64; 4], FeatureError> {
    let accels = trace
        .accels
        .as_ref()
        .ok_or(FeatureError::MissingModality(Modality::Texture))?;
    let mut sums = [0.0; 3];
    let mut axes = 0usize;
    let mut corr = 0.0;
    let mut pairs = 0usize;
    let mut first_err = None;
    for acc in accels {
        let rows: Vec<Vec<f64>> = acc.row_iter().map(|r| r.iter().copied().collect()).collect();
        for row in &rows {
            match (activity(row), mobility(row), complexity(row)) {
                (Ok(a), Ok(m), Ok(c)) => {
                    sums[0] += a;
                    sums[1] += m;
                    sums[2] += c;
                    axes += 1;
                }
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            if i < rows.len() && j < rows.len() {
                match linear_correlation(&rows[i], &rows[j]) {
                    Ok(r) => {
                        corr += r;
                        pairs += 1;
                    }
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
        }
    }
    if axes == 0 || pairs == 0 {
        return Err(first_err.unwrap_or(FeatureError::ZeroVariance("texture")));
    }
    let n = axes as f64;
    Ok([sums[0] / n, sums[1] / n, sums[2] / n, corr / pairs as f64])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{ExploratoryAction, NoiseScales, ObjectSpec, SensorLayout, Simulator};
    use nalgebra::DMatrix;

    fn trace(forces: Option<DMatrix<f64>>, accels: Option<Vec<DMatrix<f64>>>, m: usize) -> SensorTrace {
        SensorTrace {
            forces,
            temps: DMatrix::from_element(1, m, 25.0),
            accels,
            sample_rate_hz: 100.0,
        }
    }

    #[test]
    fn stiffness_of_constant_and_two_sensor_traces() {
        let t = trace(Some(DMatrix::from_element(4, 50, 0.5)), None, 50);
        assert_eq!(extract_stiffness(&t).unwrap(), 0.5);
        let two = DMatrix::from_fn(2, 30, |r, _| if r == 0 { 1.0 } else { 3.0 });
        assert_eq!(extract_stiffness(&trace(Some(two), None, 30)).unwrap(), 2.0);
        assert!(matches!(
            extract_stiffness(&trace(None, None, 30)),
            Err(FeatureError::MissingModality(Modality::Force))
        ));
    }

    #[test]
    fn stiffness_matches_mean_oracle_on_simulated_trace() {
        let sim = Simulator::new(SensorLayout::default(), NoiseScales::default());
        let obj = ObjectSpec {
            id: 3,
            label: String::new(),
            stiffness_coeff: 1.7,
            roughness_amp: 0.3,
            roughness_freq: 2.0,
            thermal_time_const: 3.0,
            thermal_equilib_delta: -1.0,
        };
        let t = sim.simulate(&obj, &ExploratoryAction::standard("P2").unwrap(), 11).unwrap();
        let f = t.forces.as_ref().unwrap();
        let oracle = f.iter().sum::<f64>() / f.len() as f64;
        assert!((extract_stiffness(&t).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn texture_of_silent_trace_is_zero_variance() {
        let t = trace(None, Some(vec![DMatrix::zeros(3, 100)]), 100);
        assert!(matches!(extract_texture(&t), Err(FeatureError::ZeroVariance(_))));
        assert!(matches!(
            extract_texture(&trace(None, None, 100)),
            Err(FeatureError::MissingModality(Modality::Texture))
        ));
    }

    #[test]
    fn identical_axes_correlate_perfectly() {
        let acc = DMatrix::from_fn(3, 200, |_, t| (0.3 * t as f64).sin());
        let tex = extract_texture(&trace(None, Some(vec![acc]), 200)).unwrap();
        assert!((tex[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sinusoid_axes_match_analytic_values() {
        // axis r: amplitude a_r, frequency w_r per sample
        let amps = [1.0, 0.5, 2.0];
        let omegas = [0.1, 0.25, 0.4];
        let m = 20_000;
        let acc = DMatrix::from_fn(3, m, |r, t| amps[r] * (omegas[r] * t as f64 + r as f64).sin());
        let tex = extract_texture(&trace(None, Some(vec![acc.clone(), acc]), m)).unwrap();
        let act = amps.iter().map(|a| a * a / 2.0).sum::<f64>() / 3.0;
        let mob = omegas.iter().sum::<f64>() / 3.0;
        assert!((tex[0] / act - 1.0).abs() < 0.05);
        assert!((tex[1] / mob - 1.0).abs() < 0.05);
        assert!((tex[2] - 1.0).abs() < 0.05);
        // distinct frequencies are nearly uncorrelated over many periods
        assert!(tex[3].abs() < 0.05);
    }

    #[test]
    fn constant_axis_is_skipped() {
        let acc = DMatrix::from_fn(3, 500, |r, t| if r == 2 { 0.0 } else { (0.2 * t as f64).sin() });
        let tex = extract_texture(&trace(None, Some(vec![acc]), 500)).unwrap();
        assert!((tex[3] - 1.0).abs() < 1e-12);
        assert!((tex[2] - 1.0).abs() < 0.05);
    }

    #[test]
    fn layout_per_kind() {
        assert_eq!(segment_layout(ActionKind::Sliding)[0], (Modality::Texture, 4));
        assert_eq!(segment_layout(ActionKind::Pressing)[1], (Modality::Thermal, 10));
    }
}
