//! Kernel algebra: per-modality RBF kernels, their weighted combination on the
//! probability simplex, and the relatedness-scaled block kernel used to pool
//! old and new objects.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureObservation, Modality};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("observation lacks a {0} segment")]
    Segmentation(Modality),
    #[error("invalid kernel parameter {name} = {value}")]
    Parameter { name: &'static str, value: f64 },
    #[error("weights must match parts: {weights} weights for {parts} parts")]
    WeightCount { weights: usize, parts: usize },
    #[error("empty observation set")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfKernel {
    pub length_scale: f64,
    pub signal_variance: f64,
}

fn sq_dist(x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
    if x.len() != y.len() {
        return Err(KernelError::Dimension {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

impl RbfKernel {
    pub fn new(length_scale: f64, signal_variance: f64) -> Result<Self, KernelError> {
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(KernelError::Parameter {
                name: "length_scale",
                value: length_scale,
            });
        }
        if !(signal_variance.is_finite() && signal_variance > 0.0) {
            return Err(KernelError::Parameter {
                name: "signal_variance",
                value: signal_variance,
            });
        }
        Ok(Self {
            length_scale,
            signal_variance,
        })
    }

    /// `σ² exp(-‖x-y‖² / 2ℓ²)`
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, KernelError> {
        Ok(self.eval_sq_dist(sq_dist(x, y)?))
    }

    #[inline]
    pub fn eval_sq_dist(&self, d2: f64) -> f64 {
        self.signal_variance * (-0.5 * d2 / (self.length_scale * self.length_scale)).exp()
    }
}

/// Simplex repair: clip negatives to zero, then renormalize. An all-zero
/// vector becomes uniform.
pub fn project_simplex(w: &mut [f64]) {
    for v in w.iter_mut() {
        if !v.is_finite() || *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        for v in w.iter_mut() {
            *v /= s;
        }
    } else {
        let u = 1.0 / w.len() as f64;
        w.iter_mut().for_each(|v| *v = u);
    }
}

/// `Σ_m γ_m k_m(x^(m), y^(m))` with `γ` on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedKernel {
    pub parts: Vec<(Modality, RbfKernel)>,
    pub weights: Vec<f64>,
}

impl CombinedKernel {
    pub fn new(parts: Vec<(Modality, RbfKernel)>, weights: Vec<f64>) -> Result<Self, KernelError> {
        if parts.len() != weights.len() || parts.is_empty() {
            return Err(KernelError::WeightCount {
                weights: weights.len(),
                parts: parts.len(),
            });
        }
        if let Some(&bad) = weights.iter().find(|w| !(w.is_finite() && (0.0..=1.0).contains(*w))) {
            return Err(KernelError::Parameter {
                name: "weight",
                value: bad,
            });
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(KernelError::Parameter {
                name: "weight_sum",
                value: total,
            });
        }
        Ok(Self { parts, weights })
    }

    pub fn uniform(parts: Vec<(Modality, RbfKernel)>) -> Self {
        let n = parts.len();
        Self {
            parts,
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// A single-modality kernel.
    pub fn single(modality: Modality, k: RbfKernel) -> Self {
        Self::uniform(vec![(modality, k)])
    }

    pub fn modalities(&self) -> Vec<Modality> {
        self.parts.iter().map(|(m, _)| *m).collect()
    }

    /// Replaces the weights with the simplex repair of `raw`.
    pub fn set_weights_projected(&mut self, raw: &[f64]) {
        self.weights = raw.to_vec();
        project_simplex(&mut self.weights);
    }

    /// `k(x, x)`, independent of `x`.
    pub fn prior_variance(&self) -> f64 {
        self.parts
            .iter()
            .zip(&self.weights)
            .map(|((_, k), w)| w * k.signal_variance)
            .sum()
    }

    pub fn eval(&self, x: &FeatureObservation, y: &FeatureObservation) -> Result<f64, KernelError> {
        let mut total = 0.0;
        for ((m, k), w) in self.parts.iter().zip(&self.weights) {
            let a = x.segment(*m).ok_or(KernelError::Segmentation(*m))?;
            let b = y.segment(*m).ok_or(KernelError::Segmentation(*m))?;
            total += w * k.eval(a, b)?;
        }
        Ok(total)
    }

    /// Combination from precomputed per-part squared distances.
    #[inline]
    pub fn eval_sq_dists(&self, d2: &[f64]) -> f64 {
        self.parts
            .iter()
            .zip(&self.weights)
            .zip(d2)
            .map(|(((_, k), w), d)| w * k.eval_sq_dist(*d))
            .sum()
    }
}

/// Block kernel over `[old; new]` whose old/new cross blocks are scaled by
/// `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentKernel {
    pub base: CombinedKernel,
    pub rho: f64,
}

pub fn check_rho(rho: f64) -> Result<(), KernelError> {
    if rho.is_finite() && (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(KernelError::Parameter { name: "rho", value: rho })
    }
}

impl DependentKernel {
    pub fn new(base: CombinedKernel, rho: f64) -> Result<Self, KernelError> {
        check_rho(rho)?;
        Ok(Self { base, rho })
    }
}

pub fn gram(k: &CombinedKernel, xs: &[FeatureObservation]) -> Result<DMatrix<f64>, KernelError> {
    Ok(DistanceCache::new(&k.modalities(), xs)?.gram(k))
}

/// `K(xs, ys)`, `|xs| x |ys|`.
pub fn cross_gram(k: &CombinedKernel, xs: &[FeatureObservation], ys: &[FeatureObservation]) -> Result<DMatrix<f64>, KernelError> {
    let mut out = DMatrix::zeros(xs.len(), ys.len());
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            out[(i, j)] = k.eval(x, y)?;
        }
    }
    Ok(out)
}

pub fn dependent_gram(
    k: &DependentKernel,
    old: &[FeatureObservation],
    new: &[FeatureObservation],
) -> Result<DMatrix<f64>, KernelError> {
    check_rho(k.rho)?;
    let all: Vec<FeatureObservation> = old.iter().chain(new).cloned().collect();
    Ok(DistanceCache::new(&k.base.modalities(), &all)?.dependent_gram(&k.base, old.len(), k.rho))
}

/// Pairwise squared distances per modality for a fixed observation set, so
/// Gram matrices can be rebuilt cheaply while hyperparameters change.
#[derive(Debug, Clone)]
pub struct DistanceCache {
    n: usize,
    /// `parts x (n*n)` row-major distance tables.
    d2: Vec<Vec<f64>>,
}

impl DistanceCache {
    pub fn new(modalities: &[Modality], xs: &[FeatureObservation]) -> Result<Self, KernelError> {
        if xs.is_empty() {
            return Err(KernelError::Empty);
        }
        let n = xs.len();
        let mut d2 = Vec::with_capacity(modalities.len());
        for &m in modalities {
            let segs = xs
                .iter()
                .map(|x| x.segment(m).ok_or(KernelError::Segmentation(m)))
                .collect::<Result<Vec<_>, _>>()?;
            let mut table = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = sq_dist(segs[i], segs[j])?;
                    table[i * n + j] = d;
                    table[j * n + i] = d;
                }
            }
            d2.push(table);
        }
        Ok(Self { n, d2 })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Squared distances between points `i` and `j` in part `p`.
    pub fn part(&self, p: usize, i: usize, j: usize) -> f64 {
        self.d2[p][i * self.n + j]
    }

    /// Median nonzero pairwise distance of part `p`, if any.
    pub fn median_distance(&self, p: usize) -> Option<f64> {
        let mut v: Vec<f64> = (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.part(p, i, j))
            .filter(|d| *d > 0.0)
            .map(f64::sqrt)
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(v[v.len() / 2])
    }

    pub fn gram(&self, k: &CombinedKernel) -> DMatrix<f64> {
        self.dependent_gram(k, 0, 1.0)
    }

    /// Gram over the cached points where the first `n_old` are old and the
    /// cross blocks are scaled by `rho`.
    pub fn dependent_gram(&self, k: &CombinedKernel, n_old: usize, rho: f64) -> DMatrix<f64> {
        let n = self.n;
        let mut out = DMatrix::zeros(n, n);
        let mut d = vec![0.0; self.d2.len()];
        for i in 0..n {
            for j in i..n {
                for (p, table) in self.d2.iter().enumerate() {
                    d[p] = table[i * n + j];
                }
                let mut v = k.eval_sq_dists(&d);
                if (i < n_old) != (j < n_old) {
                    v *= rho;
                }
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }
}
