//! Simulated tactile world: objects with latent physical properties and
//! signal generators for pressing, sliding, and static contact.
//!
//! The generators are deliberately simple. Force is a plateau at
//! `stiffness_coeff * depth`, vibration is a small harmonic bank at the
//! surface's spatial frequency times the sliding speed, and skin temperature
//! relaxes exponentially toward `ambient + thermal_equilib_delta`. On top of
//! white per-sample noise, every trace draws a multiplicative log-normal jitter
//! of its latent levels so that repeated touches of the same object differ the
//! way repeated real touches do.

mod action;
mod catalog;

pub use action::{ActionKind, ActionParams, ExploratoryAction, STANDARD_ACTIONS};
pub use catalog::{load_catalog, parse_catalog, Catalog, NoiseScales, SensorLayout, CATALOG_SCHEMA_VERSION};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds::{self, Namespace};

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("degenerate trace: {duration_s} s at {sample_rate_hz} Hz gives {samples} samples (need at least 2)")]
    DegenerateTrace {
        duration_s: f64,
        sample_rate_hz: f64,
        samples: usize,
    },
    #[error("invalid action {name}: {reason}")]
    InvalidAction { name: String, reason: String },
    #[error("catalog schema error at `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("catalog io error: {0}")]
    Io(#[from] std::io::Error),
}

/// An object of the simulated world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: u32,
    #[serde(default)]
    pub label: String,
    /// N/mm
    pub stiffness_coeff: f64,
    /// dimensionless vibration gain per newton of sliding force
    pub roughness_amp: f64,
    /// surface spatial frequency; multiplied by the sliding speed in cm/s it
    /// gives the vibration frequency in Hz
    pub roughness_freq: f64,
    /// seconds
    pub thermal_time_const: f64,
    /// °C, any sign
    pub thermal_equilib_delta: f64,
}

impl ObjectSpec {
    pub(crate) fn validate(&self, at: &str) -> Result<(), SignalError> {
        let positive = [
            ("stiffness_coeff", self.stiffness_coeff),
            ("roughness_freq", self.roughness_freq),
            ("thermal_time_const", self.thermal_time_const),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SignalError::Schema {
                    field: format!("{at}.{name}"),
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        if !(self.roughness_amp.is_finite() && self.roughness_amp >= 0.0) {
            return Err(SignalError::Schema {
                field: format!("{at}.roughness_amp"),
                reason: format!("must be finite and >= 0, got {}", self.roughness_amp),
            });
        }
        if !self.thermal_equilib_delta.is_finite() {
            return Err(SignalError::Schema {
                field: format!("{at}.thermal_equilib_delta"),
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Raw multi-sensor recording of one exploratory action.
///
/// Force and temperature matrices are `channels x samples`; each accelerometer
/// is a `3 x samples` matrix with rows x, y, z.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrace {
    pub forces: Option<DMatrix<f64>>,
    pub temps: DMatrix<f64>,
    pub accels: Option<Vec<DMatrix<f64>>>,
    pub sample_rate_hz: f64,
}

impl SensorTrace {
    pub fn samples(&self) -> usize {
        self.temps.ncols()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples() as f64 / self.sample_rate_hz
    }
}

/// Number of samples for `duration_s` at `rate`, rounded down.
pub fn sample_count(duration_s: f64, rate: f64) -> usize {
    // tolerate representation error in products such as 0.3 * 10
    (duration_s * rate + 1e-9).floor().max(0.0) as usize
}

/// Harmonic weights of the vibration bank.
const HARMONICS: [f64; 3] = [1.0, 0.5, 0.25];
/// Per-axis gains (x along the sliding direction, z normal to the surface).
const AXIS_GAIN: [f64; 3] = [1.0, 0.8, 0.5];
/// Per-axis phase offsets applied to the harmonic bank, in radians.
const AXIS_PHASE: [f64; 3] = [0.0, 0.35, 1.4];

/// Trace generator for a fixed sensor layout and noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulator {
    pub layout: SensorLayout,
    pub noise: NoiseScales,
}

impl Simulator {
    pub fn new(layout: SensorLayout, noise: NoiseScales) -> Self {
        Self { layout, noise }
    }

    pub fn from_catalog(catalog: &Catalog) -> Self {
        Self::new(catalog.sensors.clone(), catalog.noise.clone())
    }

    /// A pure function of `(object, action, seed)`.
    pub fn simulate(
        &self,
        object: &ObjectSpec,
        action: &ExploratoryAction,
        seed: u64,
    ) -> Result<SensorTrace, SignalError> {
        action.validate()?;
        let rate = self.layout.sample_rate_hz;
        let duration = action.params.duration_s();
        let m = sample_count(duration, rate);
        if m < 2 {
            return Err(SignalError::DegenerateTrace {
                duration_s: duration,
                sample_rate_hz: rate,
                samples: m,
            });
        }
        let mut rng = seeds::rng(seed, Namespace::Trace, &[u64::from(object.id)]);
        let noise = &self.noise;
        let cells = self.layout.cells;

        // Latent jitters are drawn first and in a fixed order so that every
        // channel group sees the same per-trace perturbation for a given seed.
        let j_force = lognormal(&mut rng, noise.force_jitter);
        let j_amp = lognormal(&mut rng, noise.texture_jitter);
        let j_freq = lognormal(&mut rng, noise.texture_jitter * 0.5);
        let j_delta = lognormal(&mut rng, noise.thermal_jitter);
        let j_tau = lognormal(&mut rng, noise.thermal_jitter);
        let base_phase: Vec<f64> = HARMONICS
            .iter()
            .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
            .collect();

        let forces = match action.params {
            ActionParams::Pressing { depth_mm, .. } | ActionParams::StaticContact { depth_mm, .. } => {
                let plateau = object.stiffness_coeff * depth_mm * j_force;
                let rows = cells * self.layout.force_per_cell;
                Some(DMatrix::from_fn(rows, m, |_, _| plateau + noise.force_sd * gauss(&mut rng)))
            }
            ActionParams::Sliding { .. } => None,
        };

        let accels = match action.params {
            ActionParams::Sliding { force_n, speed_cm_s, .. } => {
                let amplitude = object.roughness_amp * force_n * j_amp;
                let freq_hz = object.roughness_freq * speed_cm_s * j_freq;
                let count = cells * self.layout.accel_per_cell;
                let mut out = Vec::with_capacity(count);
                for _ in 0..count {
                    let mut acc = DMatrix::from_fn(3, m, |axis, t| {
                        let time = t as f64 / rate;
                        let clean: f64 = HARMONICS
                            .iter()
                            .enumerate()
                            .map(|(h, w)| {
                                let k = (h + 1) as f64;
                                w * (std::f64::consts::TAU * k * freq_hz * time
                                    + base_phase[h]
                                    + k * AXIS_PHASE[axis])
                                    .sin()
                            })
                            .sum();
                        amplitude * AXIS_GAIN[axis] * clean
                    });
                    for v in acc.iter_mut() {
                        *v += noise.accel_sd * gauss(&mut rng);
                    }
                    for mut row in acc.row_iter_mut() {
                        let mean = row.mean();
                        row.add_scalar_mut(-mean);
                    }
                    out.push(acc);
                }
                Some(out)
            }
            _ => None,
        };

        let delta = object.thermal_equilib_delta * j_delta;
        let tau = object.thermal_time_const * j_tau;
        let ambient = self.layout.ambient_c;
        let rows = cells * self.layout.temp_per_cell;
        let temps = DMatrix::from_fn(rows, m, |_, t| {
            let time = t as f64 / rate;
            ambient + delta * (1.0 - (-time / tau).exp()) + noise.temp_sd * gauss(&mut rng)
        });

        Ok(SensorTrace {
            forces,
            temps,
            accels,
            sample_rate_hz: rate,
        })
    }
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

fn lognormal<R: Rng>(rng: &mut R, sd: f64) -> f64 {
    let z = gauss(rng);
    if sd > 0.0 {
        (sd * z).exp()
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> Simulator {
        Simulator::new(SensorLayout::default(), NoiseScales::zero())
    }

    fn object(stiffness: f64, amp: f64) -> ObjectSpec {
        ObjectSpec {
            id: 1,
            label: "test".into(),
            stiffness_coeff: stiffness,
            roughness_amp: amp,
            roughness_freq: 3.0,
            thermal_time_const: 4.0,
            thermal_equilib_delta: -2.0,
        }
    }

    #[test]
    fn noiseless_plateau_is_stiffness_times_depth() {
        let trace = quiet()
            .simulate(&object(2.0, 1.0), &ExploratoryAction::pressing("P", 2.0, 3.0), 9)
            .unwrap();
        let f = trace.forces.unwrap();
        assert_eq!(f.nrows(), 21);
        assert_eq!(f.ncols(), 300);
        assert!((f.mean() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_roughness_gives_silent_accelerometers() {
        let trace = quiet()
            .simulate(&object(1.0, 0.0), &ExploratoryAction::standard("S4").unwrap(), 3)
            .unwrap();
        assert!(trace.forces.is_none());
        for acc in trace.accels.unwrap() {
            assert!(acc.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn same_seed_same_trace() {
        let sim = Simulator::new(SensorLayout::default(), NoiseScales::default());
        let obj = object(1.3, 0.8);
        for name in ["P1", "S2", "C1"] {
            let a = ExploratoryAction::standard(name).unwrap();
            assert_eq!(sim.simulate(&obj, &a, 42).unwrap(), sim.simulate(&obj, &a, 42).unwrap());
            assert_ne!(sim.simulate(&obj, &a, 42).unwrap(), sim.simulate(&obj, &a, 43).unwrap());
        }
    }

    #[test]
    fn plateau_monotone_in_stiffness_and_depth() {
        let sim = quiet();
        let mut last = 0.0;
        for k in [0.5, 1.0, 1.5, 3.0] {
            for d in [0.5, 1.0, 2.0] {
                let f = sim
                    .simulate(&object(k, 1.0), &ExploratoryAction::pressing("P", d, 1.0), 0)
                    .unwrap()
                    .forces
                    .unwrap()
                    .mean();
                assert!((f - k * d).abs() < 1e-12);
            }
            let f = sim
                .simulate(&object(k, 1.0), &ExploratoryAction::pressing("P", 2.0, 1.0), 0)
                .unwrap()
                .forces
                .unwrap()
                .mean();
            assert!(f > last);
            last = f;
        }
    }

    #[test]
    fn channel_contract_per_kind() {
        let sim = Simulator::new(SensorLayout::default(), NoiseScales::default());
        let obj = object(1.0, 1.0);
        for a in ExploratoryAction::standard_set() {
            let t = sim.simulate(&obj, &a, 1).unwrap();
            match a.kind() {
                ActionKind::Pressing | ActionKind::StaticContact => {
                    assert!(t.forces.is_some() && t.accels.is_none())
                }
                ActionKind::Sliding => {
                    let acc = t.accels.as_ref().unwrap();
                    assert!(t.forces.is_none());
                    assert_eq!(acc.len(), 7);
                    assert!(acc.iter().all(|m| m.nrows() == 3));
                }
            }
            assert_eq!(t.temps.nrows(), 7);
            assert_eq!(t.samples(), sample_count(a.params.duration_s(), 100.0));
        }
    }

    #[test]
    fn too_short_trace_is_rejected() {
        let err = quiet()
            .simulate(&object(1.0, 1.0), &ExploratoryAction::pressing("P", 1.0, 0.015), 0)
            .unwrap_err();
        assert!(matches!(err, SignalError::DegenerateTrace { samples: 1, .. }));
    }

    #[test]
    fn temperature_relaxes_toward_equilibrium() {
        let trace = quiet()
            .simulate(&object(1.0, 1.0), &ExploratoryAction::standard("C1").unwrap(), 0)
            .unwrap();
        let first = trace.temps[(0, 0)];
        let last = trace.temps[(0, trace.samples() - 1)];
        assert!((first - 25.0).abs() < 1e-12);
        // 15 s with tau = 4 s: within 3% of the asymptote
        assert!((last - 23.0).abs() < 0.06);
    }
}
