//! Gauss-Hermite rule for Gaussian expectations of the logistic sigmoid.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

/// Number of nodes; even, so nodes come in `±x` pairs.
const NODES: usize = 64;

/// Positive nodes and their weights for `∫ e^{-x²} f(x) dx`.
fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| hermite_rule(NODES))
}

/// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix,
/// weights `√π v₀²`. Returns the positive half, mirrored for exact symmetry.
pub fn hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &x)| (x, std::f64::consts::PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .filter(|(x, _)| *x > 0.0)
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `E[σ(z)]` for `z ~ N(mean, var)`, with `σ` the logistic function.
///
/// Written as `1/2 + 1/2 E[tanh(z/2)]` over symmetric node pairs, so that
/// `mean = 0` gives exactly `1/2` and negating `mean` maps `p` to `1 - p`.
pub fn logistic_gaussian_mean(mean: f64, var: f64) -> f64 {
    let (nodes, weights) = rule();
    let s = (2.0 * var.max(0.0)).sqrt();
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * (((mean + s * x) / 2.0).tanh() + ((mean - s * x) / 2.0).tanh());
    }
    0.5 + 0.5 * acc / std::f64::consts::PI.sqrt()
}
