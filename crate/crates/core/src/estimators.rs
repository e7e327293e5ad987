//! Reference estimators compared against the bounds.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::model::{Measurement, ProblemModel, SparseSignal};

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    /// Least squares on a known support.
    Oracle { support: Vec<usize> },
    /// Keep the `s` largest entries of `y` (identity sensing matrix).
    MaximumLikelihood { s: usize },
    /// Unbiased around the 1-sparse point `x0`, identity sensing matrix.
    LocallyUnbiased { x0: SparseSignal },
    /// `Σ y_j² / (2 y_k̂)` at the largest entry; meant for `s = 1`, `σ_n = 0`.
    NoiseExploiting,
}

impl EstimatorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorSpec::Oracle { .. } => "oracle",
            EstimatorSpec::MaximumLikelihood { .. } => "ml",
            EstimatorSpec::LocallyUnbiased { .. } => "locally_unbiased",
            EstimatorSpec::NoiseExploiting => "noise_exploiting",
        }
    }

    /// Validates against `model` and caches what can be reused across trials.
    pub fn prepare(&self, model: &ProblemModel) -> Result<PreparedEstimator> {
        let n = model.n();
        let inner = match self {
            EstimatorSpec::Oracle { support } => {
                if support.is_empty() || support.len() > model.s() {
                    return Err(Error::InvalidInput(format!(
                        "oracle support needs 1..={} entries, got {}",
                        model.s(),
                        support.len()
                    )));
                }
                check_indices(support, n)?;
                let a_s = model.a().columns(support);
                let chol = Cholesky::new(a_s.transpose() * &a_s).ok_or(Error::SingularSubmatrix)?;
                Prepared::Oracle { support: support.clone(), n, a_s, chol }
            }
            EstimatorSpec::MaximumLikelihood { s } => {
                if *s == 0 || *s > n {
                    return Err(Error::InvalidInput(format!("ml sparsity must be in 1..={n}, got {s}")));
                }
                if model.m() != n {
                    return Err(Error::InvalidInput("ml estimator needs a square sensing matrix".into()));
                }
                Prepared::Ml { s: *s }
            }
            EstimatorSpec::LocallyUnbiased { x0 } => {
                model.check_signal(x0)?;
                if model.m() != n {
                    return Err(Error::InvalidInput("locally unbiased estimator needs m = n".into()));
                }
                let (q, x0q, var) = locally_unbiased_params(model, x0)?;
                Prepared::LocallyUnbiased { q, x0q, var }
            }
            EstimatorSpec::NoiseExploiting => Prepared::NoiseExploiting,
        };
        Ok(PreparedEstimator { inner })
    }
}

fn check_indices(support: &[usize], n: usize) -> Result<()> {
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("support must be strictly increasing".into()));
    }
    match support.last() {
        Some(&last) if last >= n => Err(Error::InvalidInput(format!("support index {last} out of range for n = {n}"))),
        _ => Ok(()),
    }
}

fn locally_unbiased_params(model: &ProblemModel, x0: &SparseSignal) -> Result<(usize, f64, f64)> {
    if x0.support().len() != 1 {
        return Err(Error::InvalidInput("locally unbiased estimator needs a 1-sparse x0".into()));
    }
    let q = x0.support()[0];
    Ok((q, x0.x()[q], model.likelihood_variance(x0)?))
}

#[derive(Debug, Clone)]
enum Prepared {
    Oracle { support: Vec<usize>, n: usize, a_s: DMatrix<f64>, chol: Cholesky<f64, Dyn> },
    Ml { s: usize },
    LocallyUnbiased { q: usize, x0q: f64, var: f64 },
    NoiseExploiting,
}

#[derive(Debug, Clone)]
pub struct PreparedEstimator {
    inner: Prepared,
}

impl PreparedEstimator {
    /// Dense estimate of `x` from `y`.
    pub fn estimate(&self, y: &Measurement) -> Result<DVector<f64>> {
        match &self.inner {
            Prepared::Oracle { support, n, a_s, chol } => {
                if y.len() != a_s.nrows() {
                    return Err(Error::DimensionMismatch {
                        what: "measurement length",
                        expected: a_s.nrows(),
                        found: y.len(),
                    });
                }
                let xs = chol.solve(&(a_s.transpose() * &y.y));
                let mut x = DVector::zeros(*n);
                for (k, &i) in support.iter().enumerate() {
                    x[i] = xs[k];
                }
                Ok(x)
            }
            Prepared::Ml { s } => Ok(estimate_ml_unit(&y.y, *s)?.x().clone()),
            Prepared::LocallyUnbiased { q, x0q, var } => Ok(locally_unbiased(&y.y, *q, *x0q, *var)),
            Prepared::NoiseExploiting => Ok(estimate_noise_exploiting(&y.y)?.x().clone()),
        }
    }
}

/// `x̂_S = A_S† y`, zero elsewhere.
pub fn estimate_oracle(model: &ProblemModel, support: &[usize], y: &Measurement) -> Result<SparseSignal> {
    let est = EstimatorSpec::Oracle { support: support.to_vec() }.prepare(model)?;
    SparseSignal::new(est.estimate(y)?)
}

/// `P_s(y)`: the `s` largest-magnitude entries of `y`, ties to the lowest index.
pub fn estimate_ml_unit(y: &DVector<f64>, s: usize) -> Result<SparseSignal> {
    if s == 0 || s > y.len() {
        return Err(Error::InvalidInput(format!("need 1 <= s <= {}, got {s}", y.len())));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    // stable sort keeps lower indices first among equal magnitudes
    order.sort_by(|&a, &b| y[b].abs().total_cmp(&y[a].abs()));
    let mut x = DVector::zeros(y.len());
    for &i in &order[..s] {
        x[i] = y[i];
    }
    SparseSignal::new(x)
}

/// `x̂_q = y_q`, `x̂_k = y_k exp(−(2 y_q x_{0,q} + x_{0,q}²) / (2σ²_{x0}))` for `k ≠ q`.
pub fn estimate_locally_unbiased(y: &Measurement, x0: &SparseSignal, model: &ProblemModel) -> Result<DVector<f64>> {
    model.check_signal(x0)?;
    if y.len() != x0.len() {
        return Err(Error::DimensionMismatch { what: "measurement length", expected: x0.len(), found: y.len() });
    }
    let (q, x0q, var) = locally_unbiased_params(model, x0)?;
    Ok(locally_unbiased(&y.y, q, x0q, var))
}

fn locally_unbiased(y: &DVector<f64>, q: usize, x0q: f64, var: f64) -> DVector<f64> {
    let factor = (-(2.0 * y[q] * x0q + x0q * x0q) / (2.0 * var)).exp();
    let mut x = y * factor;
    x[q] = y[q];
    x
}

/// `x̂_k̂ = Σ_j y_j² / (2 y_k̂)` with `k̂ = argmax |y_k|` (lowest index on ties).
pub fn estimate_noise_exploiting(y: &DVector<f64>) -> Result<SparseSignal> {
    if y.is_empty() {
        return Err(Error::UndefinedSupport);
    }
    let k = y.iamax();
    if y[k] == 0.0 {
        return Err(Error::UndefinedSupport);
    }
    let mut x = DVector::zeros(y.len());
    x[k] = y.norm_squared() / (2.0 * y[k]);
    SparseSignal::new(x)
}
