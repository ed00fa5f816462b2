use nalgebra::{DMatrix, DVector};

use super::{cholesky_lower, Covariance, GpError};
use crate::features::FeatureObservation;
use crate::kernels::CombinedKernel;

/// Diagonal jitter tried when `K + σ²I` fails to factor as given.
const FALLBACK_JITTER: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct GprModel {
    pub cov: Covariance,
    pub noise_variance: f64,
    pub x: Vec<FeatureObservation>,
    pub y: DVector<f64>,
    l: DMatrix<f64>,
    alpha: DVector<f64>,
    pub jitter: f64,
}

fn factor(k: &DMatrix<f64>, noise: f64) -> Option<(DMatrix<f64>, f64)> {
    let n = k.nrows();
    let with = |extra: f64| {
        let mut m = k.clone();
        for i in 0..n {
            m[(i, i)] += noise + extra;
        }
        cholesky_lower(m)
    };
    with(0.0).map(|l| (l, 0.0)).or_else(|| with(FALLBACK_JITTER).map(|l| (l, FALLBACK_JITTER)))
}

pub fn gpr_fit(kernel: &CombinedKernel, x: &[FeatureObservation], y: &[f64], noise_variance: f64) -> Result<GprModel, GpError> {
    if x.is_empty() || x.len() != y.len() {
        return Err(GpError::Input(format!("{} inputs for {} targets", x.len(), y.len())));
    }
    if !(noise_variance.is_finite() && noise_variance >= 0.0) {
        return Err(GpError::Input(format!("noise variance {noise_variance}")));
    }
    let cov = Covariance::plain(kernel.clone());
    let k = cov.gram(x)?;
    let (l, jitter) = factor(&k, noise_variance).ok_or(GpError::NotPositiveDefinite { n: x.len() })?;
    let yv = DVector::from_column_slice(y);
    let alpha = solve_llt(&l, &yv);
    Ok(GprModel {
        cov,
        noise_variance,
        x: x.to_vec(),
        y: yv,
        l,
        alpha,
        jitter,
    })
}

fn solve_llt(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let z = l.solve_lower_triangular(b).expect("nonsingular factor");
    l.transpose().solve_upper_triangular(&z).expect("nonsingular factor")
}

impl GprModel {
    /// Predictive mean and variance of a noisy observation at `q`.
    pub fn predict(&self, q: &FeatureObservation) -> Result<(f64, f64), GpError> {
        let ks = self.cov.cross(&self.x, q)?;
        let mean = ks.dot(&self.alpha);
        let v = self.l.solve_lower_triangular(&ks).expect("nonsingular factor");
        let var = self.cov.kernel.prior_variance() - v.dot(&v) + self.noise_variance;
        Ok((mean, var))
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.y.len() as f64;
        -0.5 * self.y.dot(&self.alpha) - self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
            - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

/// `log p(y | X)` for a Gram matrix `k` and noise `σ²`, or `None` if the
/// matrix cannot be factored.
pub fn gpr_log_marginal_likelihood(k: &DMatrix<f64>, y: &DVector<f64>, noise_variance: f64) -> Option<f64> {
    let (l, _) = factor(k, noise_variance)?;
    let alpha = solve_llt(&l, y);
    let n = y.len() as f64;
    Some(
        -0.5 * y.dot(&alpha) - l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
            - 0.5 * n * (2.0 * std::f64::consts::PI).ln(),
    )
}
