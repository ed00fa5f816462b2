//! Multi-start coordinate search on the log marginal likelihood.
//!
//! Coordinates are the log length scale of each part, the log signal
//! variance (one shared amplitude by default), the combination weights
//! (moved one at a time and repaired onto the simplex), and optionally the
//! relatedness `ρ`. A move is kept only if it improves the objective; after a
//! sweep without improvement every step is halved.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{gpr_log_marginal_likelihood, laplace_mode, GpError};
use crate::features::{FeatureObservation, Modality};
use crate::kernels::{project_simplex, CombinedKernel, DistanceCache};
use crate::seeds::{self, Namespace};

/// An objective that scores kernel hyperparameters on fixed data.
pub trait MarginalLikelihood {
    /// `log p(y | X, θ)`, or `None` if the model cannot be fitted at `θ`.
    fn evaluate(&self, kernel: &CombinedKernel, rho: f64) -> Option<f64>;
}

/// Laplace-approximate evidence of a binary classifier, optionally with a
/// dependent block structure over the first `n_old` points.
#[derive(Debug, Clone)]
pub struct GpcObjective {
    cache: DistanceCache,
    y: Vec<f64>,
    n_old: usize,
}

impl GpcObjective {
    pub fn new(modalities: &[Modality], x: &[FeatureObservation], y: &[f64], n_old: usize) -> Result<Self, GpError> {
        if x.len() != y.len() || n_old > x.len() {
            return Err(GpError::Input(format!("{} inputs, {} labels, {n_old} old", x.len(), y.len())));
        }
        Ok(Self {
            cache: DistanceCache::new(modalities, x)?,
            y: y.to_vec(),
            n_old,
        })
    }

    pub fn cache(&self) -> &DistanceCache {
        &self.cache
    }
}

impl MarginalLikelihood for GpcObjective {
    fn evaluate(&self, kernel: &CombinedKernel, rho: f64) -> Option<f64> {
        let k = if self.n_old == 0 {
            self.cache.gram(kernel)
        } else {
            self.cache.dependent_gram(kernel, self.n_old, rho)
        };
        laplace_mode(&k, &self.y).ok().map(|f| f.lml).filter(|v| v.is_finite())
    }
}

/// Exact evidence of a regression model with fixed noise variance.
#[derive(Debug, Clone)]
pub struct GprObjective {
    cache: DistanceCache,
    y: DVector<f64>,
    noise_variance: f64,
}

impl GprObjective {
    pub fn new(modalities: &[Modality], x: &[FeatureObservation], y: &[f64], noise_variance: f64) -> Result<Self, GpError> {
        if x.len() != y.len() {
            return Err(GpError::Input(format!("{} inputs for {} targets", x.len(), y.len())));
        }
        Ok(Self {
            cache: DistanceCache::new(modalities, x)?,
            y: DVector::from_column_slice(y),
            noise_variance,
        })
    }
}

impl MarginalLikelihood for GprObjective {
    fn evaluate(&self, kernel: &CombinedKernel, _rho: f64) -> Option<f64> {
        gpr_log_marginal_likelihood(&self.cache.gram(kernel), &self.y, self.noise_variance).filter(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// objective evaluations allowed per restart
    pub max_evals: usize,
    pub length_bounds: (f64, f64),
    pub variance_bounds: (f64, f64),
    /// initial step in log space for length scales and signal variance
    pub log_step: f64,
    /// initial step for weights and `ρ`
    pub linear_step: f64,
    /// search ends once steps shrink below this fraction of their start
    pub min_step_ratio: f64,
    pub optimize_weights: bool,
    pub optimize_rho: bool,
    /// share one signal variance across all parts
    pub tie_variances: bool,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 3,
            max_evals: 120,
            length_bounds: (1e-2, 1e3),
            variance_bounds: (1e-2, 1e2),
            log_step: 1.0,
            linear_step: 0.25,
            min_step_ratio: 1.0 / 64.0,
            optimize_weights: true,
            optimize_rho: false,
            tie_variances: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub kernel: CombinedKernel,
    pub rho: f64,
    pub lml: f64,
    pub evaluations: usize,
    /// objective at each restart's starting point
    pub start_lmls: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
struct Point {
    log_len: Vec<f64>,
    log_var: Vec<f64>,
    weights: Vec<f64>,
    rho: f64,
}

impl Point {
    fn from_kernel(k: &CombinedKernel, rho: f64, tie: bool) -> Self {
        let log_var = if tie {
            vec![k.parts[0].1.signal_variance.ln()]
        } else {
            k.parts.iter().map(|(_, r)| r.signal_variance.ln()).collect()
        };
        Self {
            log_len: k.parts.iter().map(|(_, r)| r.length_scale.ln()).collect(),
            log_var,
            weights: k.weights.clone(),
            rho,
        }
    }

    fn to_kernel(&self, template: &CombinedKernel) -> CombinedKernel {
        let mut k = template.clone();
        for (i, (_, r)) in k.parts.iter_mut().enumerate() {
            r.length_scale = self.log_len[i].exp();
            r.signal_variance = self.log_var[i.min(self.log_var.len() - 1)].exp();
        }
        k.weights = self.weights.clone();
        k
    }

    fn clamp(&mut self, cfg: &OptimizerConfig) {
        let (la, lb) = (cfg.length_bounds.0.ln(), cfg.length_bounds.1.ln());
        let (va, vb) = (cfg.variance_bounds.0.ln(), cfg.variance_bounds.1.ln());
        self.log_len.iter_mut().for_each(|v| *v = v.clamp(la, lb));
        self.log_var.iter_mut().for_each(|v| *v = v.clamp(va, vb));
        project_simplex(&mut self.weights);
        self.rho = self.rho.clamp(0.0, 1.0);
    }
}

#[derive(Clone, Copy)]
enum Coord {
    Len(usize),
    Var(usize),
    Weight(usize),
    Rho,
}

fn coords(p: &Point, cfg: &OptimizerConfig) -> Vec<Coord> {
    let mut c: Vec<Coord> = (0..p.log_len.len()).map(Coord::Len).collect();
    c.extend((0..p.log_var.len()).map(Coord::Var));
    if cfg.optimize_weights && p.weights.len() > 1 {
        c.extend((0..p.weights.len()).map(Coord::Weight));
    }
    if cfg.optimize_rho {
        c.push(Coord::Rho);
    }
    c
}

fn moved(p: &Point, c: Coord, delta_log: f64, delta_lin: f64, cfg: &OptimizerConfig) -> Point {
    let mut q = p.clone();
    match c {
        Coord::Len(i) => q.log_len[i] += delta_log,
        Coord::Var(i) => q.log_var[i] += delta_log,
        Coord::Weight(i) => q.weights[i] += delta_lin,
        Coord::Rho => q.rho += delta_lin,
    }
    q.clamp(cfg);
    q
}

fn search<O: MarginalLikelihood>(
    obj: &O,
    template: &CombinedKernel,
    start: Point,
    start_val: f64,
    cfg: &OptimizerConfig,
) -> (Point, f64, usize) {
    let mut best = start;
    let mut val = start_val;
    let mut evals = 0;
    let mut scale = 1.0;
    let cs = coords(&best, cfg);
    'outer: while scale >= cfg.min_step_ratio {
        let mut improved = false;
        for &c in &cs {
            for sign in [1.0, -1.0] {
                if evals >= cfg.max_evals {
                    break 'outer;
                }
                let cand = moved(&best, c, sign * cfg.log_step * scale, sign * cfg.linear_step * scale, cfg);
                if cand == best {
                    continue;
                }
                evals += 1;
                if let Some(v) = obj.evaluate(&cand.to_kernel(template), cand.rho) {
                    if v > val {
                        best = cand;
                        val = v;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            scale *= 0.5;
        }
    }
    (best, val, evals)
}

/// Maximizes `obj` from `start` (restart 0) and `cfg.restarts - 1` seeded
/// perturbations of it. The returned evidence is at least that of every
/// start point that could be evaluated.
pub fn optimize_hyperparams<O: MarginalLikelihood>(
    obj: &O,
    start: &CombinedKernel,
    start_rho: f64,
    cfg: &OptimizerConfig,
) -> Result<OptimizeResult, GpError> {
    let restarts = cfg.restarts.max(1);
    let base = {
        let mut p = Point::from_kernel(start, start_rho, cfg.tie_variances);
        p.clamp(cfg);
        p
    };
    let mut best: Option<(Point, f64)> = None;
    let mut evaluations = 0;
    let mut start_lmls = Vec::with_capacity(restarts);
    let mut diagnostics = Vec::new();
    for r in 0..restarts {
        let point = if r == 0 {
            base.clone()
        } else {
            let mut rng = seeds::rng(cfg.seed, Namespace::Optimizer, &[r as u64]);
            let mut p = base.clone();
            for v in p.log_len.iter_mut() {
                *v += rng.sample::<f64, _>(StandardNormal);
            }
            for v in p.log_var.iter_mut() {
                *v += 0.5 * rng.sample::<f64, _>(StandardNormal);
            }
            if cfg.optimize_weights {
                for w in p.weights.iter_mut() {
                    *w = rng.random::<f64>() + 1e-3;
                }
            }
            if cfg.optimize_rho {
                p.rho = rng.random::<f64>();
            }
            p.clamp(cfg);
            p
        };
        evaluations += 1;
        let Some(v0) = obj.evaluate(&point.to_kernel(start), point.rho) else {
            start_lmls.push(None);
            diagnostics.push(format!("restart {r}: objective undefined at start"));
            continue;
        };
        start_lmls.push(Some(v0));
        let (p, v, n) = search(obj, start, point, v0, cfg);
        evaluations += n;
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((p, v));
        }
    }
    let (p, lml) = best.ok_or(GpError::Optimization { restarts, diagnostics })?;
    Ok(OptimizeResult {
        kernel: p.to_kernel(start),
        rho: p.rho,
        lml,
        evaluations,
        start_lmls,
    })
}
