//! The perturbed linear model `y = (A + E) x + n`.

use std::sync::Arc;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest `n` for which [`spark_exceeds`] enumerates column subsets.
pub const SPARK_EXHAUSTIVE_LIMIT: usize = 20;

/// Sensing matrix `A`.
///
/// The identity case is kept symbolic: the unit-matrix experiments run at
/// `n = 10⁴`, where a dense identity would not fit in memory.
#[derive(Debug, Clone, PartialEq)]
pub enum SensingMatrix {
    Identity(usize),
    Dense(DMatrix<f64>),
}

impl SensingMatrix {
    pub fn rows(&self) -> usize {
        match self {
            SensingMatrix::Identity(n) => *n,
            SensingMatrix::Dense(a) => a.nrows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            SensingMatrix::Identity(n) => *n,
            SensingMatrix::Dense(a) => a.ncols(),
        }
    }

    /// True for the symbolic identity and for dense matrices equal to `I`.
    pub fn is_identity(&self) -> bool {
        match self {
            SensingMatrix::Identity(_) => true,
            SensingMatrix::Dense(a) => {
                a.is_square()
                    && a.iter().enumerate().all(|(k, &v)| {
                        let (i, j) = (k % a.nrows(), k / a.nrows());
                        v == if i == j { 1.0 } else { 0.0 }
                    })
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SensingMatrix::Identity(n) => DMatrix::identity(*n, *n),
            SensingMatrix::Dense(a) => a.clone(),
        }
    }

    /// `A v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            SensingMatrix::Identity(_) => v.clone(),
            SensingMatrix::Dense(a) => a * v,
        }
    }

    /// `Aᵀ r`.
    pub fn apply_transpose(&self, r: &DVector<f64>) -> DVector<f64> {
        match self {
            SensingMatrix::Identity(_) => r.clone(),
            SensingMatrix::Dense(a) => a.tr_mul(r),
        }
    }

    /// `A_S`, the columns indexed by `support`.
    pub fn columns(&self, support: &[usize]) -> DMatrix<f64> {
        match self {
            SensingMatrix::Identity(n) => {
                let mut out = DMatrix::zeros(*n, support.len());
                for (k, &j) in support.iter().enumerate() {
                    out[(j, k)] = 1.0;
                }
                out
            }
            SensingMatrix::Dense(a) => a.select_columns(support),
        }
    }

    /// `A_Sᵀ A_S`.
    pub fn gram_of(&self, support: &[usize]) -> DMatrix<f64> {
        match self {
            SensingMatrix::Identity(_) => DMatrix::identity(support.len(), support.len()),
            SensingMatrix::Dense(_) => {
                let cols = self.columns(support);
                linalg::symmetrize(&cols.tr_mul(&cols))
            }
        }
    }

    /// `AᵀA`.
    pub fn gram(&self) -> DMatrix<f64> {
        match self {
            SensingMatrix::Identity(n) => DMatrix::identity(*n, *n),
            SensingMatrix::Dense(a) => linalg::symmetrize(&a.tr_mul(a)),
        }
    }
}

/// Problem definition: sensing matrix, perturbation and noise levels, sparsity budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemModel {
    a: Arc<SensingMatrix>,
    sigma_e: f64,
    sigma_n: f64,
    s: usize,
}

impl ProblemModel {
    pub fn new(a: SensingMatrix, sigma_e: f64, sigma_n: f64, s: usize) -> Result<Self> {
        Self::from_shared(Arc::new(a), sigma_e, sigma_n, s)
    }

    pub fn from_shared(a: Arc<SensingMatrix>, sigma_e: f64, sigma_n: f64, s: usize) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::InvalidInput("sensing matrix must be at least 1x1".into()));
        }
        if s == 0 || s > a.cols() {
            return Err(Error::InvalidInput(format!(
                "sparsity budget s = {s} must satisfy 1 <= s <= n = {}",
                a.cols()
            )));
        }
        for (name, v) in [("sigma_e", sigma_e), ("sigma_n", sigma_n)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(ProblemModel { a, sigma_e, sigma_n, s })
    }

    /// Identity sensing matrix of size `n`.
    pub fn identity(n: usize, sigma_e: f64, sigma_n: f64, s: usize) -> Result<Self> {
        Self::new(SensingMatrix::Identity(n), sigma_e, sigma_n, s)
    }

    /// Same matrix and budget, different noise levels.
    pub fn with_noise(&self, sigma_e: f64, sigma_n: f64) -> Result<Self> {
        Self::from_shared(Arc::clone(&self.a), sigma_e, sigma_n, self.s)
    }

    pub fn a(&self) -> &SensingMatrix {
        &self.a
    }

    pub fn shared_matrix(&self) -> Arc<SensingMatrix> {
        Arc::clone(&self.a)
    }

    pub fn sigma_e(&self) -> f64 {
        self.sigma_e
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Validates that `signal` lives in `R^n` and respects the sparsity budget.
    pub fn check_signal(&self, signal: &SparseSignal) -> Result<()> {
        if signal.len() != self.n() {
            return Err(Error::DimensionMismatch { what: "signal length", expected: self.n(), found: signal.len() });
        }
        if signal.support().len() > self.s {
            return Err(Error::InvalidInput(format!(
                "signal has {} nonzeros, budget is s = {}",
                signal.support().len(),
                self.s
            )));
        }
        Ok(())
    }

    /// `σ_x²` for likelihood-based operations; zero is rejected.
    pub(crate) fn likelihood_variance(&self, signal: &SparseSignal) -> Result<f64> {
        let v = sigma_x_squared(self, signal)?;
        if v <= 0.0 {
            return Err(Error::DegenerateModel);
        }
        Ok(v)
    }

    /// `σ²_{x+v} = σ_e² ‖x + v‖² + σ_n²` for an arbitrary vector.
    pub(crate) fn variance_at(&self, x: &DVector<f64>) -> f64 {
        self.sigma_e * self.sigma_e * x.norm_squared() + self.sigma_n * self.sigma_n
    }
}

/// Parameter vector with its explicit, sorted support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    x: DVector<f64>,
    support: Vec<usize>,
}

impl SparseSignal {
    /// Builds a signal whose support is the set of nonzero entries of `x`.
    pub fn new(x: DVector<f64>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("signal entries must be finite".into()));
        }
        let support = x.iter().positions(|&v| v != 0.0).collect();
        Ok(SparseSignal { x, support })
    }

    pub fn from_vec(x: Vec<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(x))
    }

    /// Signal of length `n` with `values` placed at `support`.
    pub fn from_parts(n: usize, support: &[usize], values: &[f64]) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "support values",
                expected: support.len(),
                found: values.len(),
            });
        }
        let mut x = DVector::zeros(n);
        for (&j, &v) in support.iter().zip(values) {
            if j >= n {
                return Err(Error::InvalidInput(format!("support index {j} out of range 0..{n}")));
            }
            x[j] = v;
        }
        Self::new(x)
    }

    pub fn zeros(n: usize) -> Self {
        SparseSignal { x: DVector::zeros(n), support: Vec::new() }
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn norm_squared(&self) -> f64 {
        self.x.norm_squared()
    }

    /// `x_S`.
    pub fn on_support(&self) -> DVector<f64> {
        linalg::gather(&self.x, &self.support)
    }

    /// `(q, x_q)`: the nonzero entry of smallest magnitude (lowest index on ties).
    pub fn smallest_entry(&self) -> Option<(usize, f64)> {
        self.support.iter().map(|&j| (j, self.x[j])).min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    }
}

/// Observed measurement vector `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y: DVector<f64>,
}

impl Measurement {
    pub fn new(y: DVector<f64>) -> Self {
        Measurement { y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// `σ_x² = σ_e² ‖x‖² + σ_n²`.
pub fn sigma_x_squared(model: &ProblemModel, signal: &SparseSignal) -> Result<f64> {
    if signal.len() != model.n() {
        return Err(Error::DimensionMismatch { what: "signal length", expected: model.n(), found: signal.len() });
    }
    Ok(model.variance_at(signal.x()))
}

/// Draws `y = (A + E) x + n`.
///
/// Only the columns of `E` on the support of `x` influence `y`, so only those
/// are sampled; the result has the same law as sampling all of `E`.
pub fn sample_measurement<R: Rng + ?Sized>(
    model: &ProblemModel,
    signal: &SparseSignal,
    rng: &mut R,
) -> Result<Measurement> {
    model.check_signal(signal)?;
    let mut y = model.a().apply(signal.x());
    let (se, sn) = (model.sigma_e(), model.sigma_n());
    let support = signal.support();
    for yi in y.iter_mut() {
        if se > 0.0 {
            for &j in support {
                let e: f64 = StandardNormal.sample(rng);
                *yi += se * e * signal.x()[j];
            }
        }
        if sn > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            *yi += sn * z;
        }
    }
    Ok(Measurement::new(y))
}

/// `m × n` matrix with iid `N(0, 1/m)` entries.
pub fn generate_gaussian_matrix<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> DMatrix<f64> {
    let scale = 1.0 / (m as f64).sqrt();
    DMatrix::from_fn(m, n, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

/// Uniformly random size-`s` support with iid equiprobable `±1` entries.
pub fn generate_bernoulli_signal<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Result<SparseSignal> {
    if s > n {
        return Err(Error::InvalidInput(format!("s = {s} exceeds n = {n}")));
    }
    let mut support = index::sample(rng, n, s).into_vec();
    support.sort_unstable();
    let values: Vec<f64> = (0..s).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    SparseSignal::from_parts(n, &support, &values)
}

/// `spark(A) > k` by exhaustive rank checks, for `n ≤ 20`.
pub fn spark_exceeds(a: &SensingMatrix, k: usize) -> Result<bool> {
    spark_exceeds_with_limit(a, k, SPARK_EXHAUSTIVE_LIMIT)
}

pub fn spark_exceeds_with_limit(a: &SensingMatrix, k: usize, limit: usize) -> Result<bool> {
    let (m, n) = (a.rows(), a.cols());
    if n > limit {
        return Err(Error::UnsupportedSize { n, limit });
    }
    let k = k.min(n);
    if k == 0 {
        return Ok(true);
    }
    if k > m {
        return Ok(false);
    }
    if a.is_identity() {
        return Ok(true);
    }
    // Every k-subset independent implies every smaller subset is too.
    Ok((0..n).combinations(k).all(|cols| linalg::numerical_rank(&a.columns(&cols)) == k))
}
