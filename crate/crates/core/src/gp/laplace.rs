//! Binary GP classification with a logistic likelihood, using the Laplace
//! approximation to the latent posterior. Newton's method on
//! `Ψ(f) = log p(y|f) - fᵀK⁻¹f / 2` is carried out in the numerically stable
//! `B = I + W½ K W½` parameterization, with step halving whenever an update
//! fails to increase `Ψ`.

use nalgebra::{DMatrix, DVector};

use super::{cholesky_lower, logistic_gaussian_mean, Covariance, GpError};
use crate::features::FeatureObservation;
use crate::kernels::CombinedKernel;

/// Added to the Gram diagonal before every factorization.
pub const GPC_JITTER: f64 = 1e-8;
const MAX_ITER: usize = 100;
const TOL: f64 = 1e-6;
const MAX_HALVINGS: usize = 30;
const P_FLOOR: f64 = 1e-15;

/// `log σ(z)` without overflow.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// State of the approximation at the posterior mode.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceFit {
    /// latent mode `f̂`
    pub mode: DVector<f64>,
    /// `∇ log p(y|f̂)`
    pub grad: DVector<f64>,
    pub sqrt_w: DVector<f64>,
    /// lower factor of `I + W½ K W½`
    pub l: DMatrix<f64>,
    /// approximate `log q(y|X)`
    pub lml: f64,
    pub iterations: usize,
    /// `‖∇ log p(y|f̂) - K⁻¹f̂‖∞` at exit
    pub stationarity: f64,
}

fn psi(a: &DVector<f64>, f: &DVector<f64>, y: &[f64]) -> f64 {
    -0.5 * a.dot(f) + y.iter().zip(f.iter()).map(|(yi, fi)| log_sigmoid(yi * fi)).sum::<f64>()
}

struct Local {
    grad: DVector<f64>,
    sqrt_w: DVector<f64>,
    l: DMatrix<f64>,
}

fn local(k: &DMatrix<f64>, f: &DVector<f64>, y: &[f64]) -> Result<Local, GpError> {
    let n = y.len();
    let pi = f.map(sigmoid);
    let grad = DVector::from_fn(n, |i, _| (y[i] + 1.0) / 2.0 - pi[i]);
    let sqrt_w = pi.map(|p| (p * (1.0 - p)).sqrt());
    let mut b = DMatrix::from_fn(n, n, |i, j| sqrt_w[i] * k[(i, j)] * sqrt_w[j]);
    for i in 0..n {
        b[(i, i)] += 1.0;
    }
    let l = cholesky_lower(b).ok_or(GpError::NotPositiveDefinite { n })?;
    Ok(Local { grad, sqrt_w, l })
}

/// Finds the Laplace mode for Gram matrix `k` (jitter is added here) and
/// labels `y ∈ {-1, +1}`.
pub fn laplace_mode(k: &DMatrix<f64>, y: &[f64]) -> Result<LaplaceFit, GpError> {
    let n = y.len();
    if n == 0 || k.nrows() != n || k.ncols() != n {
        return Err(GpError::Input(format!("gram {}x{} for {n} labels", k.nrows(), k.ncols())));
    }
    if let Some(bad) = y.iter().find(|v| **v != 1.0 && **v != -1.0) {
        return Err(GpError::Labels(format!("labels must be -1 or +1, got {bad}")));
    }
    let mut k = k.clone();
    for i in 0..n {
        k[(i, i)] += GPC_JITTER;
    }
    let mut f = DVector::zeros(n);
    let mut a = DVector::zeros(n);
    let mut obj = psi(&a, &f, y);
    let mut trace = vec![obj];
    for it in 0..=MAX_ITER {
        let loc = local(&k, &f, y)?;
        let stationarity = (&loc.grad - &a).amax();
        if stationarity < TOL {
            let lml = obj - loc.l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
            return Ok(LaplaceFit {
                mode: f,
                grad: loc.grad,
                sqrt_w: loc.sqrt_w,
                l: loc.l,
                lml,
                iterations: it,
                stationarity,
            });
        }
        if it == MAX_ITER {
            break;
        }
        let w = loc.sqrt_w.map(|s| s * s);
        let b = w.component_mul(&f) + &loc.grad;
        let kb = &k * &b;
        let c = loc
            .l
            .solve_lower_triangular(&loc.sqrt_w.component_mul(&kb))
            .expect("nonsingular factor");
        let back = loc.l.transpose().solve_upper_triangular(&c).expect("nonsingular factor");
        let mut a_new = b - loc.sqrt_w.component_mul(&back);
        let mut f_new = &k * &a_new;
        let mut obj_new = psi(&a_new, &f_new, y);
        let mut halvings = 0;
        while !(obj_new >= obj) && halvings < MAX_HALVINGS {
            a_new = (&a + &a_new) * 0.5;
            f_new = &k * &a_new;
            obj_new = psi(&a_new, &f_new, y);
            halvings += 1;
        }
        if !(obj_new >= obj) {
            // no ascent direction left at working precision
            let loc = local(&k, &f, y)?;
            let stationarity = (&loc.grad - &a).amax();
            if stationarity < TOL * 1e3 {
                let lml = obj - loc.l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
                return Ok(LaplaceFit {
                    mode: f,
                    grad: loc.grad,
                    sqrt_w: loc.sqrt_w,
                    l: loc.l,
                    lml,
                    iterations: it + 1,
                    stationarity,
                });
            }
            trace.push(obj_new);
            return Err(GpError::Convergence { iterations: it + 1, trace });
        }
        a = a_new;
        f = f_new;
        obj = obj_new;
        trace.push(obj);
    }
    Err(GpError::Convergence {
        iterations: MAX_ITER,
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct BinaryGpcModel {
    pub cov: Covariance,
    pub x: Vec<FeatureObservation>,
    pub y: Vec<f64>,
    pub fit: LaplaceFit,
}

pub fn gpc_fit(kernel: &CombinedKernel, x: &[FeatureObservation], y: &[f64]) -> Result<BinaryGpcModel, GpError> {
    gpc_fit_with(Covariance::plain(kernel.clone()), x, y)
}

pub fn gpc_fit_with(cov: Covariance, x: &[FeatureObservation], y: &[f64]) -> Result<BinaryGpcModel, GpError> {
    if x.len() != y.len() {
        return Err(GpError::Input(format!("{} inputs for {} labels", x.len(), y.len())));
    }
    if cov.n_old > x.len() {
        return Err(GpError::Input(format!("{} old points among {}", cov.n_old, x.len())));
    }
    let k = cov.gram(x)?;
    let fit = laplace_mode(&k, y)?;
    Ok(BinaryGpcModel {
        cov,
        x: x.to_vec(),
        y: y.to_vec(),
        fit,
    })
}

impl BinaryGpcModel {
    /// Mean and variance of the approximate latent posterior at `q`.
    pub fn latent(&self, q: &FeatureObservation) -> Result<(f64, f64), GpError> {
        let ks = self.cov.cross(&self.x, q)?;
        let mean = ks.dot(&self.fit.grad);
        let v = self
            .fit
            .l
            .solve_lower_triangular(&self.fit.sqrt_w.component_mul(&ks))
            .expect("nonsingular factor");
        let var = (self.cov.kernel.prior_variance() - v.dot(&v)).max(0.0);
        Ok((mean, var))
    }

    /// `p(y* = +1 | q)`, strictly inside `(0, 1)`.
    pub fn predict(&self, q: &FeatureObservation) -> Result<f64, GpError> {
        let (mean, var) = self.latent(q)?;
        Ok(logistic_gaussian_mean(mean, var).clamp(P_FLOOR, 1.0 - P_FLOOR))
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.fit.lml
    }
}
