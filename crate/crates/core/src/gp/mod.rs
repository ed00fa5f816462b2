//! Gaussian-process engine: exact regression, binary classification by the
//! Laplace approximation, one-vs-all multiclass, and marginal-likelihood
//! hyperparameter search.

mod gpr;
mod laplace;
mod optimize;
mod ova;
mod quadrature;

pub use gpr::{gpr_fit, gpr_log_marginal_likelihood, GprModel};
pub use laplace::{gpc_fit, gpc_fit_with, laplace_mode, log_sigmoid, BinaryGpcModel, LaplaceFit, GPC_JITTER};
pub use optimize::{
    optimize_hyperparams, GpcObjective, GprObjective, MarginalLikelihood, OptimizeResult, OptimizerConfig,
};
pub use ova::{argmax_lowest, ova_fit, OvaGpcModel};
pub use quadrature::{hermite_rule, logistic_gaussian_mean};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureObservation;
use crate::kernels::{check_rho, CombinedKernel, DistanceCache, KernelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("matrix of size {n} is not positive definite even after jitter")]
    NotPositiveDefinite { n: usize },
    #[error("Laplace iteration did not converge in {iterations} iterations (objective trace {trace:?})")]
    Convergence { iterations: usize, trace: Vec<f64> },
    #[error("invalid labels: {0}")]
    Labels(String),
    #[error("class {class}: {source}")]
    Class { class: u32, source: Box<GpError> },
    #[error("all {restarts} optimizer restarts failed: {diagnostics:?}")]
    Optimization { restarts: usize, diagnostics: Vec<String> },
    #[error("invalid input: {0}")]
    Input(String),
}

/// Covariance structure of a training set: a combined kernel, optionally
/// with the first `n_old` points belonging to a related old object whose
/// covariance with everything else is scaled by `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    pub kernel: CombinedKernel,
    pub n_old: usize,
    pub rho: f64,
}

impl Covariance {
    pub fn plain(kernel: CombinedKernel) -> Self {
        Self {
            kernel,
            n_old: 0,
            rho: 1.0,
        }
    }

    pub fn dependent(kernel: CombinedKernel, n_old: usize, rho: f64) -> Result<Self, GpError> {
        check_rho(rho)?;
        Ok(Self { kernel, n_old, rho })
    }

    pub fn gram(&self, x: &[FeatureObservation]) -> Result<DMatrix<f64>, GpError> {
        Ok(self.gram_cached(&DistanceCache::new(&self.kernel.modalities(), x)?))
    }

    pub fn gram_cached(&self, cache: &DistanceCache) -> DMatrix<f64> {
        if self.n_old == 0 {
            cache.gram(&self.kernel)
        } else {
            cache.dependent_gram(&self.kernel, self.n_old, self.rho)
        }
    }

    /// Covariance between the training points and a query treated as a new
    /// object's point.
    pub fn cross(&self, x: &[FeatureObservation], q: &FeatureObservation) -> Result<DVector<f64>, GpError> {
        let mut out = DVector::zeros(x.len());
        for (i, xi) in x.iter().enumerate() {
            let v = self.kernel.eval(xi, q)?;
            out[i] = if i < self.n_old { self.rho * v } else { v };
        }
        Ok(out)
    }
}

/// Lower Cholesky factor, or `None` if `m` is not positive definite.
pub(crate) fn cholesky_lower(m: DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.cholesky().map(|c| c.l())
}
