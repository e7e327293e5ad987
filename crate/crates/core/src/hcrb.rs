//! Hammersley-Chapman-Robbins bounds.
//!
//! The general bound takes test points `x + v_i` inside the sparse set and
//! returns `V H† Vᵀ`, where `H_ij = E[(δ_i p / p)(δ_j p / p)]` has a closed form
//! for the Gaussian likelihood. For the identity sensing matrix a particular
//! family of test points leads to an analytic bound whose nonsupport part is
//! governed by the worst-case entry SNR `β = x_q² / σ_x²`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ProblemModel, SparseSignal};

/// Below this `β` the expressions in `β / (e^β − 1)` switch to their series.
pub const SMALL_BETA: f64 = 1e-8;

/// Test points `x + v_i` with the derived `V` and `H` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPointSet {
    pub offsets: Vec<DVector<f64>>,
    /// `n × k`, columns are the offsets.
    pub v: DMatrix<f64>,
    /// `k × k` symmetric.
    pub h: DMatrix<f64>,
    /// `ς²_{x, v_i, v_j}`.
    pub varsigma2: DMatrix<f64>,
}

impl TestPointSet {
    pub fn new(model: &ProblemModel, signal: &SparseSignal, offsets: Vec<DVector<f64>>) -> Result<Self> {
        model.check_signal(signal)?;
        let sx2 = model.likelihood_variance(signal)?;
        let (n, k) = (model.n(), offsets.len());
        let x = signal.x();
        let se2 = model.sigma_e() * model.sigma_e();
        let m = model.m() as f64;

        for (i, v) in offsets.iter().enumerate() {
            if v.len() != n {
                return Err(Error::DimensionMismatch { what: "offset length", expected: n, found: v.len() });
            }
            let nonzeros = (x + v).iter().filter(|&&t| t != 0.0).count();
            if nonzeros > model.s() {
                return Err(Error::InfeasibleOffset { index: i, nonzeros, s: model.s() });
            }
        }

        // δ_i = σ²_{x+v_i}/σ_x² − 1, evaluated without cancellation.
        let delta: Vec<f64> = offsets.iter().map(|v| se2 * (2.0 * x.dot(v) + v.norm_squared()) / sx2).collect();
        let var_at: Vec<f64> = delta.iter().map(|d| sx2 * (1.0 + d)).collect();
        let av: Vec<DVector<f64>> = offsets.iter().map(|v| model.a().apply(v)).collect();

        let mut h = DMatrix::zeros(k, k);
        let mut varsigma2 = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                // 1/ς² = σ_x² (1 − δ_i δ_j) / (σ_i² σ_j²)
                let det = 1.0 - delta[i] * delta[j];
                let inv_varsigma2 = sx2 * det / (var_at[i] * var_at[j]);
                if !(det > 0.0) {
                    return Err(Error::DivergentTestPoint { i, j, inv_varsigma2 });
                }
                let vs2 = 1.0 / inv_varsigma2;
                let combined = &av[i] / var_at[i] + &av[j] / var_at[j];
                let exponent = -av[i].norm_squared() / (2.0 * var_at[i]) - av[j].norm_squared() / (2.0 * var_at[j])
                    + 0.5 * vs2 * combined.norm_squared();
                // (σ_x² ς² / (σ_i² σ_j²))^{m/2} = (1 − δ_i δ_j)^{−m/2}
                let log_ratio = -0.5 * m * (-delta[i] * delta[j]).ln_1p();
                let value = (log_ratio + exponent).exp_m1();
                h[(i, j)] = value;
                h[(j, i)] = value;
                varsigma2[(i, j)] = vs2;
                varsigma2[(j, i)] = vs2;
            }
        }

        let mut v = DMatrix::zeros(n, k);
        for (c, off) in offsets.iter().enumerate() {
            v.set_column(c, off);
        }
        Ok(TestPointSet { offsets, v, h, varsigma2 })
    }
}

/// Covariance lower bound `V H† Vᵀ` and its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct HcrbGeneral {
    pub covariance: DMatrix<f64>,
    pub trace: f64,
}

impl HcrbGeneral {
    /// Sum of the diagonal entries at `indices`.
    pub fn partial_trace(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.covariance[(i, i)]).sum()
    }
}

pub fn hcrb_general(model: &ProblemModel, signal: &SparseSignal, offsets: Vec<DVector<f64>>) -> Result<HcrbGeneral> {
    let set = TestPointSet::new(model, signal, offsets)?;
    Ok(hcrb_from_set(&set))
}

pub fn hcrb_from_set(set: &TestPointSet) -> HcrbGeneral {
    let h_pinv = linalg::pinv_symmetric(&set.h, linalg::PINV_RTOL);
    let covariance = linalg::symmetrize(&(&set.v * h_pinv * set.v.transpose()));
    let trace = covariance.trace();
    HcrbGeneral { covariance, trace }
}

/// Offsets `t · e_i` for every `i` in the support of `signal`.
pub fn support_offsets(signal: &SparseSignal, t: f64) -> Vec<DVector<f64>> {
    signal
        .support()
        .iter()
        .map(|&i| {
            let mut v = DVector::zeros(signal.len());
            v[i] = t;
            v
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcrbReport {
    pub bound: f64,
    /// Equals the maximal-support CCRB on the identity matrix.
    pub support_part: f64,
    /// `σ_x² · d_HCRB`.
    pub nonsupport_part: f64,
    pub beta: f64,
    pub g_beta: f64,
}

fn require_unit_maximal(model: &ProblemModel, signal: &SparseSignal) -> Result<()> {
    if !model.a().is_identity() {
        return Err(Error::UnsupportedMatrix);
    }
    model.check_signal(signal)?;
    if model.n() < 2 {
        return Err(Error::Domain("closed-form HCRB requires n >= 2".into()));
    }
    if signal.support().len() != model.s() {
        return Err(Error::WrongRegime { support: signal.support().len(), s: model.s(), expected: "maximal" });
    }
    Ok(())
}

/// Closed-form HCRB for the identity sensing matrix and a maximal support.
pub fn hcrb_unit_closed_form(model: &ProblemModel, signal: &SparseSignal) -> Result<HcrbReport> {
    require_unit_maximal(model, signal)?;
    let sx2 = model.likelihood_variance(signal)?;
    let n = model.n();
    let se = model.sigma_e();
    let beta = beta_of(signal, model)?;
    let g_beta = g_function(beta, n, se)?;
    // σ_x² (s − k‖x‖²/(σ_x² + k‖x‖²)), k = 2nσ_e⁴, which is the maximal-support CCRB
    let support_part = crate::ccrb::ccrb_maximal(model, signal)?.bound;
    let nonsupport_part = sx2 * nonsupport_factor(beta, g_beta, n - model.s());
    Ok(HcrbReport { bound: support_part + nonsupport_part, support_part, nonsupport_part, beta, g_beta })
}

/// `d_HCRB = (n−s) β e^{−β}/(e^β − 1) · (1 − 1/(n − s + e^β (1 − g(β))⁻¹))`.
pub fn d_hcrb(model: &ProblemModel, signal: &SparseSignal) -> Result<f64> {
    require_unit_maximal(model, signal)?;
    let beta = beta_of(signal, model)?;
    let g = g_function(beta, model.n(), model.sigma_e())?;
    Ok(nonsupport_factor(beta, g, model.n() - model.s()))
}

fn nonsupport_factor(beta: f64, g: f64, n_minus_s: usize) -> f64 {
    if n_minus_s == 0 {
        return 0.0;
    }
    let ns = n_minus_s as f64;
    let e_neg = (-beta).exp();
    let lead = ns * beta_over_expm1(beta) * e_neg;
    // 1/(n−s + e^β/(1−g)) rewritten with e^{−β} so large β cannot overflow.
    let one_minus_g = 1.0 - g;
    let tail = one_minus_g * e_neg / (ns * one_minus_g * e_neg + 1.0);
    lead * (1.0 - tail)
}

/// `β / (e^β − 1)`, with a second-order series below [`SMALL_BETA`].
fn beta_over_expm1(beta: f64) -> f64 {
    if beta < SMALL_BETA {
        1.0 - beta / 2.0 + beta * beta / 12.0
    } else if beta > 1.0 {
        // e^{−β} β / (1 − e^{−β}) stays finite for large β
        beta * (-beta).exp() / -(-beta).exp_m1()
    } else {
        beta / beta.exp_m1()
    }
}

/// `g(β) = β (1 − 2σ_e²β)² / ((e^β − 1)(1 + 2nσ_e⁴β))`.
pub fn g_function(beta: f64, n: usize, sigma_e: f64) -> Result<f64> {
    if !(beta > 0.0) || beta.is_nan() {
        return Err(Error::Domain(format!("g(beta) needs beta > 0, got {beta}")));
    }
    if n < 2 {
        return Err(Error::Domain("g(beta) needs n >= 2".into()));
    }
    let se2 = sigma_e * sigma_e;
    let quad = 1.0 - 2.0 * se2 * beta;
    Ok(beta_over_expm1(beta) * quad * quad / (1.0 + 2.0 * n as f64 * se2 * se2 * beta))
}

/// Worst-case entry SNR `β = x_q² / σ_x²`.
pub fn beta_of(signal: &SparseSignal, model: &ProblemModel) -> Result<f64> {
    let (_, xq) = signal.smallest_entry().ok_or_else(|| Error::Domain("beta needs a nonzero signal".into()))?;
    let sx2 = model.likelihood_variance(signal)?;
    let beta = xq * xq / sx2;
    let se2 = model.sigma_e() * model.sigma_e();
    if se2 > 0.0 {
        let cap = 1.0 / (signal.support().len() as f64 * se2);
        debug_assert!(beta <= cap * (1.0 + 1e-12), "beta {beta} exceeds cap {cap}");
    }
    Ok(beta)
}

/// `σ_{e,t} = 1/√s`.
pub fn transition_sigma_e(s: usize) -> f64 {
    1.0 / (s as f64).sqrt()
}
