//! Thermal descriptor: the channel-mean temperature sequence resampled to a
//! fixed length, concatenated with its per-step gradient, and projected onto
//! the top principal directions of a fitting pool.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::signals::SensorTrace;

/// Number of principal directions kept.
pub const THERMAL_COMPONENTS: usize = 10;
/// Resampled length of the mean temperature sequence.
pub const DEFAULT_RESAMPLE_LEN: usize = 128;

/// Channel-mean temperature sequence `T̄`.
pub fn mean_temperature(trace: &SensorTrace) -> Vec<f64> {
    let rows = trace.temps.nrows() as f64;
    trace
        .temps
        .column_iter()
        .map(|c| c.sum() / rows)
        .collect()
}

/// Linear-interpolation resampling of `x` onto `len` evenly spaced points
/// spanning the same time interval.
pub fn resample(x: &[f64], len: usize) -> Vec<f64> {
    if x.len() == len {
        return x.to_vec();
    }
    let last = (x.len() - 1) as f64;
    (0..len)
        .map(|i| {
            let pos = if len == 1 { 0.0 } else { i as f64 * last / (len - 1) as f64 };
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(x.len() - 1);
            let frac = pos - lo as f64;
            x[lo] * (1.0 - frac) + x[hi] * frac
        })
        .collect()
}

/// `[T̄, ∇T̄]` with `T̄` resampled to `len` points and `∇T̄` the forward
/// difference per second on the resampled grid (length `len - 1`).
pub fn thermal_profile(trace: &SensorTrace, len: usize) -> Vec<f64> {
    let t = resample(&mean_temperature(trace), len);
    let dt = trace.duration_s() / (len - 1) as f64;
    let grad = t.windows(2).map(|w| (w[1] - w[0]) / dt);
    t.iter().copied().chain(grad).collect::<Vec<_>>()
}

/// PCA projection fitted on a pool of traces of one action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalProjector {
    pub mean_vector: Vec<f64>,
    /// `THERMAL_COMPONENTS` rows of length `2 * source_dim - 1`.
    pub basis: Vec<Vec<f64>>,
    /// Resampled temperature length.
    pub source_dim: usize,
    /// Variance of the fitting data along each basis direction.
    pub explained_variance: Vec<f64>,
}

impl ThermalProjector {
    pub fn fit(traces: &[&SensorTrace]) -> Result<Self, FeatureError> {
        Self::fit_with_len(traces, DEFAULT_RESAMPLE_LEN)
    }

    pub fn fit_with_len(traces: &[&SensorTrace], source_dim: usize) -> Result<Self, FeatureError> {
        let profiles: Vec<Vec<f64>> = traces.iter().map(|t| thermal_profile(t, source_dim)).collect();
        Self::fit_profiles(&profiles, source_dim)
    }

    /// Fits on precomputed `[T̄, ∇T̄]` profiles.
    pub fn fit_profiles(profiles: &[Vec<f64>], source_dim: usize) -> Result<Self, FeatureError> {
        let k = THERMAL_COMPONENTS;
        if profiles.len() < k + 1 {
            return Err(FeatureError::InsufficientData {
                needed: k + 1,
                got: profiles.len(),
            });
        }
        let dim = 2 * source_dim - 1;
        if let Some(p) = profiles.iter().find(|p| p.len() != dim) {
            return Err(FeatureError::ProjectorMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        let n = profiles.len();
        let mut mean = vec![0.0; dim];
        for p in profiles {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let centered = DMatrix::from_fn(n, dim, |i, j| profiles[i][j] - mean[j]);
        let cov = centered.transpose() * &centered / n as f64;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let basis: Vec<Vec<f64>> = order[..k]
            .iter()
            .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
            .collect();
        let explained_variance = order[..k].iter().map(|&c| eig.eigenvalues[c].max(0.0)).collect();
        Ok(Self {
            mean_vector: mean,
            basis,
            source_dim,
            explained_variance,
        })
    }

    pub fn project_profile(&self, profile: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if profile.len() != self.mean_vector.len() {
            return Err(FeatureError::ProjectorMismatch {
                expected: self.mean_vector.len(),
                got: profile.len(),
            });
        }
        let centered = DVector::from_iterator(
            profile.len(),
            profile.iter().zip(&self.mean_vector).map(|(p, m)| p - m),
        );
        Ok(self
            .basis
            .iter()
            .map(|row| row.iter().zip(centered.iter()).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Maps projection coordinates back to profile space.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean_vector.clone();
        for (c, row) in coords.iter().zip(&self.basis) {
            for (o, b) in out.iter_mut().zip(row) {
                *o += c * b;
            }
        }
        out
    }
}

/// 10-dimensional thermal feature of `trace`.
pub fn extract_thermal(trace: &SensorTrace, projector: &ThermalProjector) -> Result<Vec<f64>, FeatureError> {
    if trace.samples() < 2 {
        return Err(FeatureError::DegenerateSequence {
            len: trace.samples(),
            min: 2,
        });
    }
    projector.project_profile(&thermal_profile(trace, projector.source_dim))
}
