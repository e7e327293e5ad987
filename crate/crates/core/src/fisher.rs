//! Fisher information of the perturbed model.
//!
//! With `r = y - Ax` the likelihood is `N(Ax, σ_x² I)`, so
//!
//! ```text
//! ln p = -(m/2) ln(2π σ_x²) - ‖r‖² / (2 σ_x²)
//! ∇ ln p = Aᵀr / σ_x² + σ_e² x (‖r‖² / σ_x⁴ - m / σ_x²)
//! J = (1/σ_x²) [AᵀA + 2 m σ_e⁴ x xᵀ / σ_x²]
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{sample_measurement, Measurement, ProblemModel, SparseSignal};
use crate::rng;

/// Samples per independent random stream in [`fim_monte_carlo`].
pub const FIM_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub j: DMatrix<f64>,
    pub sigma_x2: f64,
}

/// Closed-form Fisher information.
pub fn fim_closed_form(model: &ProblemModel, signal: &SparseSignal) -> Result<FisherMatrix> {
    model.check_signal(signal)?;
    let sx2 = model.likelihood_variance(signal)?;
    let se2 = model.sigma_e() * model.sigma_e();
    let x = signal.x();
    let rank_one = x * x.transpose() * (2.0 * model.m() as f64 * se2 * se2 / sx2);
    let j = (model.a().gram() + rank_one) / sx2;
    Ok(FisherMatrix { j: linalg::symmetrize(&j), sigma_x2: sx2 })
}

/// `ln p(y; x)`.
pub fn log_likelihood(model: &ProblemModel, signal: &SparseSignal, y: &Measurement) -> Result<f64> {
    let r = residual(model, signal, y)?;
    let sx2 = model.likelihood_variance(signal)?;
    let m = model.m() as f64;
    Ok(-0.5 * m * (2.0 * std::f64::consts::PI * sx2).ln() - r.norm_squared() / (2.0 * sx2))
}

/// Analytic score `∇_x ln p(y; x)`.
pub fn score(model: &ProblemModel, signal: &SparseSignal, y: &Measurement) -> Result<DVector<f64>> {
    let r = residual(model, signal, y)?;
    let sx2 = model.likelihood_variance(signal)?;
    let se2 = model.sigma_e() * model.sigma_e();
    let m = model.m() as f64;
    let scale = se2 * (r.norm_squared() / (sx2 * sx2) - m / sx2);
    Ok(model.a().apply_transpose(&r) / sx2 + signal.x() * scale)
}

fn residual(model: &ProblemModel, signal: &SparseSignal, y: &Measurement) -> Result<DVector<f64>> {
    model.check_signal(signal)?;
    if y.len() != model.m() {
        return Err(Error::DimensionMismatch { what: "measurement length", expected: model.m(), found: y.len() });
    }
    Ok(&y.y - model.a().apply(signal.x()))
}

/// Monte Carlo estimate of `E[∇ln p ∇ᵀln p]` from `samples` measurements.
///
/// Samples are split into chunks of [`FIM_CHUNK`], each drawn from its own
/// stream of `seed`; partial sums are merged in chunk order, so the estimate
/// does not depend on the number of threads.
pub fn fim_monte_carlo(model: &ProblemModel, signal: &SparseSignal, samples: usize, seed: u64) -> Result<FisherMatrix> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be >= 1".into()));
    }
    model.check_signal(signal)?;
    let sx2 = model.likelihood_variance(signal)?;
    let n = model.n();
    let chunks = samples.div_ceil(FIM_CHUNK);

    let chunk_sum = |c: usize| -> Result<DMatrix<f64>> {
        let mut rng = rng::stream(seed, c as u64);
        let count = FIM_CHUNK.min(samples - c * FIM_CHUNK);
        let mut acc = DMatrix::zeros(n, n);
        for _ in 0..count {
            let y = sample_measurement(model, signal, &mut rng)?;
            let g = score(model, signal, &y)?;
            acc.ger(1.0, &g, &g, 1.0);
        }
        Ok(acc)
    };

    #[cfg(feature = "parallel")]
    let partials: Vec<Result<DMatrix<f64>>> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(chunk_sum).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Result<DMatrix<f64>>> = (0..chunks).map(chunk_sum).collect();

    let mut total = DMatrix::zeros(n, n);
    for p in partials {
        total += p?;
    }
    total /= samples as f64;
    Ok(FisherMatrix { j: linalg::symmetrize(&total), sigma_x2: sx2 })
}
