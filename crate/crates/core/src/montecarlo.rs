//! Reproducible Monte Carlo trial harness.
//!
//! Trial `t` draws its measurement from stream `t` of the master seed, trials
//! are grouped into fixed-size chunks and the per-chunk accumulators are merged
//! in chunk order. The result is therefore the same for any thread count.

use nalgebra::DVector;

use crate::ccrb;
use crate::error::{Error, Result};
use crate::estimators::{EstimatorSpec, PreparedEstimator};
use crate::hcrb;
use crate::model::{sample_measurement, ProblemModel, SparseSignal};
use crate::rng;

/// Trials per accumulation chunk.
pub const TRIAL_CHUNK: usize = 1024;

/// Largest tolerated fraction of failed trials.
pub const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    /// Mean of `‖x̂ − x‖²` over successful trials.
    pub mse: f64,
    /// Mean of `x̂ − x`.
    pub bias: DVector<f64>,
    /// Requested number of trials.
    pub trials: usize,
    pub failed: usize,
    pub seed: u64,
    /// Sample standard deviation of the squared errors over `√(successful)`.
    pub std_error_mse: f64,
}

// Running moments of the squared error plus the summed error vector.
#[derive(Debug, Clone)]
struct Acc {
    count: usize,
    mean: f64,
    m2: f64,
    err_sum: DVector<f64>,
    failed: usize,
    first_failure: Option<String>,
}

impl Acc {
    fn new(n: usize) -> Self {
        Acc { count: 0, mean: 0.0, m2: 0.0, err_sum: DVector::zeros(n), failed: 0, first_failure: None }
    }

    fn push(&mut self, err: &DVector<f64>) {
        let v = err.norm_squared();
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
        self.err_sum += err;
    }

    fn fail(&mut self, e: Error) {
        self.failed += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(e.to_string());
        }
    }

    fn merge(&mut self, other: Acc) {
        if other.count > 0 {
            let total = self.count + other.count;
            let delta = other.mean - self.mean;
            self.mean += delta * other.count as f64 / total as f64;
            self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / total as f64;
            self.count = total;
            self.err_sum += other.err_sum;
        }
        self.failed += other.failed;
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
    }
}

/// Empirical MSE and bias of `estimator` at `signal`.
pub fn run_trials(
    model: &ProblemModel,
    signal: &SparseSignal,
    estimator: &EstimatorSpec,
    trials: usize,
    seed: u64,
) -> Result<TrialSummary> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be >= 1".into()));
    }
    model.check_signal(signal)?;
    let prepared = estimator.prepare(model)?;
    run_prepared(model, signal, &prepared, trials, seed)
}

fn run_prepared(
    model: &ProblemModel,
    signal: &SparseSignal,
    est: &PreparedEstimator,
    trials: usize,
    seed: u64,
) -> Result<TrialSummary> {
    let n = model.n();
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let run_chunk = |c: usize| -> Acc {
        let mut acc = Acc::new(n);
        let end = ((c + 1) * TRIAL_CHUNK).min(trials);
        for t in c * TRIAL_CHUNK..end {
            let mut r = rng::stream(seed, t as u64);
            let outcome = sample_measurement(model, signal, &mut r).and_then(|y| est.estimate(&y));
            match outcome {
                Ok(xhat) => acc.push(&(xhat - signal.x())),
                Err(e) => acc.fail(e),
            }
        }
        acc
    };

    #[cfg(feature = "parallel")]
    let partials: Vec<Acc> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(run_chunk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<Acc> = (0..chunks).map(run_chunk).collect();

    let mut total = Acc::new(n);
    for p in partials {
        total.merge(p);
    }
    if total.failed as f64 > MAX_FAILURE_RATE * trials as f64 || total.count == 0 {
        return Err(Error::TooManyFailures {
            failed: total.failed,
            trials,
            first: total.first_failure.unwrap_or_default(),
        });
    }
    let count = total.count as f64;
    let variance = if total.count > 1 { total.m2 / (count - 1.0) } else { 0.0 };
    Ok(TrialSummary {
        mse: total.mean,
        bias: total.err_sum / count,
        trials,
        failed: total.failed,
        seed,
        std_error_mse: (variance / count).sqrt(),
    })
}

/// One row of a sweep: a grid value, an estimator (if any) and the analytic bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x_value: f64,
    pub estimator: Option<&'static str>,
    pub summary: Option<TrialSummary>,
    pub ccrb: f64,
    /// Closed-form HCRB where it applies (identity matrix, maximal support).
    pub hcrb: Option<f64>,
}

/// Runs every estimator at every grid value.
///
/// `model_at` and `signal_at` build the instance for a grid value. The trial
/// seed for point `g` and estimator `e` is derived from `(seed, g, e)`. With no
/// estimators the table holds the bounds only, one row per grid value.
pub fn sweep<M, S>(
    grid: &[f64],
    model_at: M,
    signal_at: S,
    estimators: &[EstimatorSpec],
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>>
where
    M: Fn(f64) -> Result<ProblemModel>,
    S: Fn(f64) -> Result<SparseSignal>,
{
    if grid.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(grid.len() * estimators.len().max(1));
    for (g, &value) in grid.iter().enumerate() {
        let model = model_at(value)?;
        let signal = signal_at(value)?;
        let ccrb = ccrb::ccrb(&model, &signal)?.bound;
        let hcrb = if model.a().is_identity() && signal.support().len() == model.s() {
            Some(hcrb::hcrb_unit_closed_form(&model, &signal)?.bound)
        } else {
            None
        };
        if estimators.is_empty() {
            rows.push(SweepRow { x_value: value, estimator: None, summary: None, ccrb, hcrb });
        }
        for (e, spec) in estimators.iter().enumerate() {
            let trial_seed = rng::derive_seed(seed, ((g as u64) << 16) | e as u64);
            let summary = run_trials(&model, &signal, spec, trials, trial_seed)?;
            rows.push(SweepRow { x_value: value, estimator: Some(spec.name()), summary: Some(summary), ccrb, hcrb });
        }
    }
    Ok(rows)
}
