//! Constrained Cramér-Rao bounds.
//!
//! For a maximal support (`|S| = s`) the feasible directions are the support
//! coordinates and the bound is `tr((A_SᵀA_S/σ_x² + rank-one)⁻¹)`; for a
//! nonmaximal support every direction is feasible and the bound is `tr(J⁻¹)`.
//! Both are evaluated with a Cholesky factorisation of the Gram matrix plus a
//! Sherman-Morrison update for the rank-one perturbation term, which splits
//! the bound into the oracle MSE (`first_term`) minus a correction (`d_ccrb`).

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::seq::index;

use crate::error::{Error, Result};
use crate::fisher::fim_closed_form;
use crate::linalg;
use crate::model::{ProblemModel, SensingMatrix, SparseSignal};
use crate::rng;

/// Largest number of supports enumerated by [`RipMode::Exhaustive`].
pub const RIP_EXHAUSTIVE_LIMIT: u128 = 100_000;
/// Default number of random supports in sampled mode.
pub const RIP_DEFAULT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Maximal,
    Nonmaximal,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Maximal => "maximal",
            Regime::Nonmaximal => "nonmaximal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcrbReport {
    pub bound: f64,
    /// Oracle-estimator MSE `σ_x² tr((A_SᵀA_S)⁻¹)` (or `σ_x² tr((AᵀA)⁻¹)`).
    pub first_term: f64,
    /// Amount subtracted from `first_term` by the perturbation-induced term.
    pub d_ccrb: f64,
    /// `d_ccrb / first_term`.
    pub gamma_ccrb: f64,
    pub regime: Regime,
}

/// Restricted extreme eigenvalue offsets over tested `s`-supports:
/// `θ_u = max λ_max(A_SᵀA_S) − 1`, `θ_l = 1 − min λ_min(A_SᵀA_S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipConstants {
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub s: usize,
    /// `true` when every support was enumerated; sampled constants under-estimate.
    pub exact: bool,
    pub supports_tested: usize,
}

/// Normalised perturbation and noise levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLevels {
    /// `m s σ_e² / tr(A_SᵀA_S)`
    pub c_e: f64,
    /// `m σ_n² / ‖x‖²`
    pub c_n: f64,
}

impl NoiseLevels {
    pub fn from_instance(model: &ProblemModel, signal: &SparseSignal) -> Result<Self> {
        model.check_signal(signal)?;
        let norm2 = signal.norm_squared();
        if norm2 == 0.0 {
            return Err(Error::Domain("noise levels need a nonzero signal".into()));
        }
        let m = model.m() as f64;
        let trace = model.a().gram_of(signal.support()).trace();
        let se2 = model.sigma_e() * model.sigma_e();
        Ok(NoiseLevels { c_e: m * model.s() as f64 * se2 / trace, c_n: m * model.sigma_n() * model.sigma_n() / norm2 })
    }

    /// `(σ_e, σ_n)` that realise these levels for `signal` on matrix `a` with budget `s`.
    pub fn sigmas_for(&self, a: &SensingMatrix, signal: &SparseSignal, s: usize) -> (f64, f64) {
        let m = a.rows() as f64;
        let trace = a.gram_of(signal.support()).trace();
        let se2 = self.c_e * trace / (m * s as f64);
        let sn2 = self.c_n * signal.norm_squared() / m;
        (se2.sqrt(), sn2.sqrt())
    }
}

fn check_rank_one_inputs(model: &ProblemModel, signal: &SparseSignal) -> Result<f64> {
    model.check_signal(signal)?;
    model.likelihood_variance(signal)
}

/// `σ_x² [tr(G⁻¹) − k‖G⁻¹u‖² / (σ_x² + k uᵀG⁻¹u)]` with `k = 2mσ_e⁴`,
/// returned as `(first_term, d)`.
fn sherman_morrison_split(g_inv: &DMatrix<f64>, u: &DVector<f64>, sx2: f64, k: f64) -> (f64, f64) {
    let w = g_inv * u;
    let first = sx2 * g_inv.trace();
    let d = sx2 * k * w.norm_squared() / (sx2 + k * u.dot(&w));
    (first, d)
}

fn report(first: f64, d: f64, regime: Regime) -> CcrbReport {
    let d = d.clamp(0.0, first);
    CcrbReport {
        bound: first - d,
        first_term: first,
        d_ccrb: d,
        gamma_ccrb: if first > 0.0 { d / first } else { 0.0 },
        regime,
    }
}

/// CCRB for a signal with maximal support `|S| = s`.
pub fn ccrb_maximal(model: &ProblemModel, signal: &SparseSignal) -> Result<CcrbReport> {
    let sx2 = check_rank_one_inputs(model, signal)?;
    let support = signal.support();
    if support.len() != model.s() {
        return Err(Error::WrongRegime { support: support.len(), s: model.s(), expected: "maximal" });
    }
    let g_inv = linalg::spd_inverse(&model.a().gram_of(support)).ok_or(Error::SingularSubmatrix)?;
    let se2 = model.sigma_e() * model.sigma_e();
    let k = 2.0 * model.m() as f64 * se2 * se2;
    let (first, d) = sherman_morrison_split(&g_inv, &signal.on_support(), sx2, k);
    Ok(report(first, d, Regime::Maximal))
}

/// CCRB for a signal with nonmaximal support `|S| < s`.
///
/// When `A` is rank deficient but `J` is not, the bound is `tr(J⁻¹)` computed
/// numerically and is not decomposed (`first_term = bound`, `d_ccrb = 0`).
pub fn ccrb_nonmaximal(model: &ProblemModel, signal: &SparseSignal) -> Result<CcrbReport> {
    let sx2 = check_rank_one_inputs(model, signal)?;
    if signal.support().len() >= model.s() {
        return Err(Error::WrongRegime { support: signal.support().len(), s: model.s(), expected: "nonmaximal" });
    }
    let fim = fim_closed_form(model, signal)?;
    if linalg::is_singular_symmetric(&fim.j) {
        return Err(Error::NoUnbiasedEstimator);
    }
    match linalg::spd_inverse(&model.a().gram()) {
        Some(g_inv) => {
            let se2 = model.sigma_e() * model.sigma_e();
            let k = 2.0 * model.m() as f64 * se2 * se2;
            let (first, d) = sherman_morrison_split(&g_inv, signal.x(), sx2, k);
            Ok(report(first, d, Regime::Nonmaximal))
        }
        None => {
            let bound = linalg::pinv_symmetric(&fim.j, linalg::PINV_RTOL).trace();
            Ok(report(bound, 0.0, Regime::Nonmaximal))
        }
    }
}

/// Dispatches on the support size.
pub fn ccrb(model: &ProblemModel, signal: &SparseSignal) -> Result<CcrbReport> {
    if signal.support().len() == model.s() {
        ccrb_maximal(model, signal)
    } else {
        ccrb_nonmaximal(model, signal)
    }
}

/// Verification route: `tr(V (VᵀJV)† Vᵀ)` with `V` an orthonormal basis of the
/// feasible directions, assembled from the closed-form Fisher matrix.
pub fn ccrb_by_projection(model: &ProblemModel, signal: &SparseSignal) -> Result<f64> {
    let fim = fim_closed_form(model, signal)?;
    let n = model.n();
    let basis: Vec<usize> =
        if signal.support().len() == model.s() { signal.support().to_vec() } else { (0..n).collect() };
    let mut v = DMatrix::zeros(n, basis.len());
    for (k, &j) in basis.iter().enumerate() {
        v[(j, k)] = 1.0;
    }
    let reduced = v.transpose() * &fim.j * &v;
    let cov = &v * linalg::pinv_symmetric(&reduced, linalg::PINV_RTOL) * v.transpose();
    Ok(cov.trace())
}

/// `tr(M⁻¹)` by LU solves against the identity.
pub fn trace_of_inverse_lu(m: &DMatrix<f64>) -> Option<f64> {
    let lu = m.clone().lu();
    let inv = lu.solve(&DMatrix::identity(m.nrows(), m.ncols()))?;
    Some(inv.trace())
}

/// Theoretical MSE of the least-squares estimator restricted to `support`.
pub fn oracle_mse_theoretical(model: &ProblemModel, support: &[usize], signal: &SparseSignal) -> Result<f64> {
    let sx2 = check_rank_one_inputs(model, signal)?;
    if support.iter().any(|&j| j >= model.n()) {
        return Err(Error::InvalidInput("support index out of range".into()));
    }
    let g_inv = linalg::spd_inverse(&model.a().gram_of(support)).ok_or(Error::SingularSubmatrix)?;
    Ok(sx2 * g_inv.trace())
}

/// Two-sided bound on `γ_CCRB` from restricted eigenvalue constants.
///
/// Returns `(lower, upper)`; both are `0` when `c_e = 0`.
pub fn gamma_bounds(rip: &RipConstants, levels: &NoiseLevels, s: usize) -> Result<(f64, f64)> {
    if !(rip.theta_lower < 1.0) {
        return Err(Error::Domain(format!("theta_lower = {} must be < 1", rip.theta_lower)));
    }
    if s == 0 {
        return Err(Error::InvalidInput("s must be >= 1".into()));
    }
    let (c_e, c_n) = (levels.c_e, levels.c_n);
    if c_e == 0.0 {
        return Ok((0.0, 0.0));
    }
    let branch = |hi: f64, lo: f64| {
        // (1/s) (1+ϑ±)³/(1+ϑ∓)² · 2c_e / (2(1+ϑ∓)c_e + 1+ϑ± + c_n/c_e)
        let (p, q) = (1.0 + hi, 1.0 + lo);
        p.powi(3) / (q * q) * 2.0 * c_e / (2.0 * q * c_e + p + c_n / c_e) / s as f64
    };
    let lower = branch(-rip.theta_lower, rip.theta_upper);
    let upper = branch(rip.theta_upper, -rip.theta_lower);
    Ok((lower, upper))
}

/// `γ(c_e, c_n) = (1/s) · 2c_e / (2c_e + 1 + c_n/c_e)`.
pub fn gamma_approx(c_e: f64, c_n: f64, s: usize) -> f64 {
    let s = s as f64;
    if c_e <= 0.0 {
        0.0
    } else if c_e.is_infinite() {
        1.0 / s
    } else {
        2.0 * c_e / (2.0 * c_e + 1.0 + c_n / c_e) / s
    }
}

/// Positive root of `2x² − x − c_n = 0`, where `γ(c_e, c_n) = 1/(2s)`.
pub fn transition_ce(c_n: f64) -> f64 {
    (1.0 + (1.0 + 8.0 * c_n).sqrt()) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RipMode {
    Exhaustive,
    Sampled { supports: usize, seed: u64 },
}

impl RipMode {
    /// Exhaustive when `C(n, s) ≤ 10⁵`, otherwise 2000 sampled supports.
    pub fn auto(n: usize, s: usize, seed: u64) -> Self {
        if binomial(n, s) <= RIP_EXHAUSTIVE_LIMIT {
            RipMode::Exhaustive
        } else {
            RipMode::Sampled { supports: RIP_DEFAULT_SAMPLES, seed }
        }
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub fn rip_constants(a: &SensingMatrix, s: usize, mode: RipMode) -> Result<RipConstants> {
    let n = a.cols();
    if s == 0 || s > n {
        return Err(Error::InvalidInput(format!("s = {s} must satisfy 1 <= s <= n = {n}")));
    }
    let (supports, exact): (Vec<Vec<usize>>, bool) = match mode {
        RipMode::Exhaustive => {
            if binomial(n, s) > RIP_EXHAUSTIVE_LIMIT {
                return Err(Error::UnsupportedSize { n, limit: RIP_EXHAUSTIVE_LIMIT as usize });
            }
            ((0..n).combinations(s).collect(), true)
        }
        RipMode::Sampled { supports, seed } => {
            let mut r = rng::stream(seed, 0);
            let draws = (0..supports.max(1))
                .map(|_| {
                    let mut idx = index::sample(&mut r, n, s).into_vec();
                    idx.sort_unstable();
                    idx
                })
                .collect();
            (draws, false)
        }
    };

    let extremes = |idx: &Vec<usize>| linalg::extreme_eigenvalues(&a.gram_of(idx));
    let fold = |(lo, hi): (f64, f64), (l, h): (f64, f64)| (lo.min(l), hi.max(h));
    let init = (f64::INFINITY, f64::NEG_INFINITY);

    #[cfg(feature = "parallel")]
    let (lambda_min, lambda_max) = {
        use rayon::prelude::*;
        supports.par_iter().map(extremes).reduce(|| init, fold)
    };
    #[cfg(not(feature = "parallel"))]
    let (lambda_min, lambda_max) = supports.iter().map(extremes).fold(init, fold);

    if lambda_min <= 0.0 {
        return Err(Error::AssumptionViolated { lambda_min });
    }
    Ok(RipConstants {
        theta_lower: 1.0 - lambda_min,
        theta_upper: lambda_max - 1.0,
        s,
        exact,
        supports_tested: supports.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_bernoulli_signal, generate_gaussian_matrix};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gaussian_model(m: usize, n: usize, s: usize, se: f64, sn: f64, seed: u64) -> ProblemModel {
        let a = generate_gaussian_matrix(m, n, &mut rng::stream(seed, 0));
        ProblemModel::new(SensingMatrix::Dense(a), se, sn, s).unwrap()
    }

    #[test]
    fn maximal_without_perturbation_on_orthonormal_columns() {
        let model = ProblemModel::identity(6, 0.0, 0.3, 2).unwrap();
        let x = SparseSignal::from_parts(6, &[1, 3], &[1.0, -2.0]).unwrap();
        let r = ccrb_maximal(&model, &x).unwrap();
        assert_relative_eq!(r.bound, 2.0 * 0.09, epsilon = 1e-15);
        assert_eq!(r.d_ccrb, 0.0);
    }

    #[test]
    fn maximal_on_identity_collapses() {
        let (n, se, sn) = (8, 0.2, 0.1);
        let model = ProblemModel::identity(n, se, sn, 3).unwrap();
        let x = SparseSignal::from_parts(n, &[0, 4, 7], &[1.0, -0.5, 2.0]).unwrap();
        let r = ccrb_maximal(&model, &x).unwrap();
        let norm2 = x.norm_squared();
        let sx2 = se * se * norm2 + sn * sn;
        let k = 2.0 * n as f64 * se.powi(4);
        assert_relative_eq!(r.first_term, sx2 * 3.0, max_relative = 1e-14);
        assert_relative_eq!(r.d_ccrb, sx2 * k * norm2 / (sx2 + k * norm2), max_relative = 1e-14);
        assert_relative_eq!(r.bound, r.first_term - r.d_ccrb);
    }

    #[test]
    fn maximal_matches_projection_route() {
        let model = gaussian_model(20, 40, 3, 0.2, 0.1, 21);
        let x = generate_bernoulli_signal(40, 3, &mut rng::stream(21, 1)).unwrap();
        let r = ccrb_maximal(&model, &x).unwrap();
        let direct = ccrb_by_projection(&model, &x).unwrap();
        assert_relative_eq!(r.bound, direct, max_relative = 1e-10);
    }

    #[test]
    fn maximal_errors() {
        let model = ProblemModel::identity(4, 0.1, 0.1, 2).unwrap();
        let x = SparseSignal::from_parts(4, &[1], &[1.0]).unwrap();
        assert!(matches!(ccrb_maximal(&model, &x), Err(Error::WrongRegime { .. })));
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0]);
        let model = ProblemModel::new(SensingMatrix::Dense(a), 0.1, 0.1, 2).unwrap();
        let x = SparseSignal::from_parts(3, &[0, 1], &[1.0, 1.0]).unwrap();
        assert_eq!(ccrb_maximal(&model, &x), Err(Error::SingularSubmatrix));
    }

    #[test]
    fn nonmaximal_examples() {
        let q = nalgebra::linalg::QR::new(generate_gaussian_matrix(5, 5, &mut rng::stream(3, 0))).q();
        let model = ProblemModel::new(SensingMatrix::Dense(q), 0.0, 0.4, 3).unwrap();
        let x = SparseSignal::from_parts(5, &[2], &[1.0]).unwrap();
        assert_relative_eq!(ccrb_nonmaximal(&model, &x).unwrap().bound, 5.0 * 0.16, max_relative = 1e-12);

        let model = ProblemModel::identity(5, 0.5, 0.4, 3).unwrap();
        let r = ccrb_nonmaximal(&model, &SparseSignal::zeros(5)).unwrap();
        assert_relative_eq!(r.bound, 5.0 * 0.16, max_relative = 1e-14);
    }

    #[test]
    fn nonmaximal_matches_lu_route() {
        let model = gaussian_model(12, 8, 4, 0.3, 0.2, 5);
        let x = SparseSignal::from_parts(8, &[2, 6], &[1.0, -1.5]).unwrap();
        let r = ccrb_nonmaximal(&model, &x).unwrap();
        let j = fim_closed_form(&model, &x).unwrap().j;
        assert_relative_eq!(r.bound, trace_of_inverse_lu(&j).unwrap(), max_relative = 1e-10);
        assert_relative_eq!(r.bound, ccrb_by_projection(&model, &x).unwrap(), max_relative = 1e-10);
    }

    #[test]
    fn nonmaximal_singular_fisher() {
        // Wide A, x = 0 ⇒ J = AᵀA/σ_n² is singular.
        let model = gaussian_model(3, 6, 2, 0.3, 0.2, 6);
        assert_eq!(ccrb_nonmaximal(&model, &SparseSignal::zeros(6)), Err(Error::NoUnbiasedEstimator));
    }

    #[test]
    fn nonmaximal_rank_deficient_a_falls_back() {
        // Rank-deficient A whose null space is filled by the rank-one term.
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let model = ProblemModel::new(SensingMatrix::Dense(a), 0.5, 0.1, 2).unwrap();
        let x = SparseSignal::from_parts(2, &[1], &[1.0]).unwrap();
        let r = ccrb_nonmaximal(&model, &x).unwrap();
        let j = fim_closed_form(&model, &x).unwrap().j;
        assert_relative_eq!(r.bound, trace_of_inverse_lu(&j).unwrap(), max_relative = 1e-10);
        assert_eq!(r.d_ccrb, 0.0);
        assert_eq!(r.first_term, r.bound);
    }

    #[test]
    fn oracle_mse_examples() {
        let model = ProblemModel::identity(6, 0.3, 0.2, 2).unwrap();
        let x = SparseSignal::from_parts(6, &[0, 5], &[1.0, 1.0]).unwrap();
        let sx2 = 0.09 * 2.0 + 0.04;
        assert_relative_eq!(oracle_mse_theoretical(&model, &[0, 5], &x).unwrap(), 2.0 * sx2, max_relative = 1e-14);
        let model = gaussian_model(10, 15, 2, 0.3, 0.2, 7);
        let x = SparseSignal::from_parts(15, &[3, 9], &[1.0, -1.0]).unwrap();
        let r = ccrb_maximal(&model, &x).unwrap();
        assert_eq!(oracle_mse_theoretical(&model, &[3, 9], &x).unwrap(), r.first_term);
    }

    #[test]
    fn gamma_approx_limits_and_transition() {
        assert_relative_eq!(gamma_approx(0.5, 0.0, 7), 1.0 / 14.0, max_relative = 1e-15);
        assert_eq!(gamma_approx(f64::INFINITY, 1.0, 4), 0.25);
        assert_relative_eq!(gamma_approx(1e12, 1.0, 4), 0.25, max_relative = 1e-11);
        assert_eq!(gamma_approx(0.0, 1.0, 4), 0.0);
        assert!(gamma_approx(1e-12, 1.0, 4) < 1e-20);
        assert_eq!(transition_ce(0.0), 0.5);
        assert_eq!(transition_ce(1.0), 1.0);
        let grid: Vec<f64> = (0..50).map(|i| transition_ce(i as f64 * 0.3)).collect();
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn gamma_bounds_collapse_without_rip_spread() {
        let rip = RipConstants { theta_lower: 0.0, theta_upper: 0.0, s: 5, exact: true, supports_tested: 1 };
        let levels = NoiseLevels { c_e: 0.8, c_n: 0.3 };
        let (lo, hi) = gamma_bounds(&rip, &levels, 5).unwrap();
        let g = gamma_approx(0.8, 0.3, 5);
        assert_relative_eq!(lo, g, max_relative = 1e-15);
        assert_relative_eq!(hi, g, max_relative = 1e-15);
        let (lo, hi) = gamma_bounds(&rip, &NoiseLevels { c_e: 1e12, c_n: 0.0 }, 5).unwrap();
        assert_relative_eq!(hi, 0.2, max_relative = 1e-10);
        assert_relative_eq!(lo, 0.2, max_relative = 1e-10);
        assert_eq!(gamma_bounds(&rip, &NoiseLevels { c_e: 0.0, c_n: 1.0 }, 5).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn rip_examples() {
        let rip = rip_constants(&SensingMatrix::Identity(6), 2, RipMode::Exhaustive).unwrap();
        assert_eq!((rip.theta_lower, rip.theta_upper, rip.exact), (0.0, 0.0, true));
        let mut a = DMatrix::identity(4, 4);
        a[(2, 2)] = 2.0;
        let rip = rip_constants(&SensingMatrix::Dense(a), 1, RipMode::Exhaustive).unwrap();
        assert_eq!(rip.theta_upper, 3.0);
        let zero_col = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            rip_constants(&SensingMatrix::Dense(zero_col), 1, RipMode::Exhaustive),
            Err(Error::AssumptionViolated { .. })
        ));
    }

    #[test]
    fn sampled_rip_is_dominated_by_exhaustive() {
        let a = SensingMatrix::Dense(generate_gaussian_matrix(4, 8, &mut rng::stream(12, 0)));
        let full = rip_constants(&a, 2, RipMode::Exhaustive).unwrap();
        assert_eq!(full.supports_tested, 28);
        let sampled = rip_constants(&a, 2, RipMode::Sampled { supports: 10, seed: 1 }).unwrap();
        assert!(!sampled.exact);
        assert!(sampled.theta_lower <= full.theta_lower);
        assert!(sampled.theta_upper <= full.theta_upper);
        assert_eq!(RipMode::auto(8, 2, 0), RipMode::Exhaustive);
        assert!(matches!(RipMode::auto(200, 10, 0), RipMode::Sampled { supports: 2000, .. }));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(12, 2), 66);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(200, 10), 22_451_004_309_013_280);
    }

    #[test]
    fn levels_round_trip_through_sigmas() {
        let model = gaussian_model(10, 20, 2, 0.0, 0.0, 13);
        let x = generate_bernoulli_signal(20, 2, &mut rng::stream(13, 1)).unwrap();
        let target = NoiseLevels { c_e: 0.7, c_n: 0.2 };
        let (se, sn) = target.sigmas_for(model.a(), &x, 2);
        let got = NoiseLevels::from_instance(&model.with_noise(se, sn).unwrap(), &x).unwrap();
        assert_relative_eq!(got.c_e, 0.7, max_relative = 1e-12);
        assert_relative_eq!(got.c_n, 0.2, max_relative = 1e-12);
    }

    #[test]
    fn gap_between_maximal_and_nonmaximal() {
        // γ₁ = lim_{x_q→0} CCRB_max ≤ γ₂ = CCRB_nonmax at the limit signal.
        let model = gaussian_model(12, 8, 2, 0.2, 0.1, 14);
        let limit = SparseSignal::from_parts(8, &[3], &[1.0]).unwrap();
        let gamma2 = ccrb_nonmaximal(&model, &limit).unwrap().bound;
        let mut prev = f64::NAN;
        for j in 4..30 {
            let xq = 2f64.powi(-j);
            let x = SparseSignal::from_parts(8, &[3, 5], &[1.0, xq]).unwrap();
            let b = ccrb_maximal(&model, &x).unwrap().bound;
            assert!(b <= gamma2);
            prev = b;
        }
        assert!(prev < gamma2 * (1.0 - 1e-3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn maximal_bound_below_oracle_mse(seed in 0u64..10_000, se in 0.0f64..1.0, sn in 0.01f64..1.0) {
            let model = gaussian_model(8, 12, 2, se, sn, seed);
            let x = generate_bernoulli_signal(12, 2, &mut rng::stream(seed, 1)).unwrap();
            let r = ccrb_maximal(&model, &x).unwrap();
            let oracle = oracle_mse_theoretical(&model, x.support(), &x).unwrap();
            prop_assert!(r.d_ccrb >= 0.0 && r.d_ccrb <= r.first_term);
            prop_assert!(r.bound <= oracle);
            if se == 0.0 {
                prop_assert_eq!(r.bound, oracle);
            } else {
                prop_assert!(r.bound < oracle);
            }
        }

        #[test]
        fn sandwich_holds_with_exhaustive_constants(seed in 0u64..10_000, ce_db in -20.0f64..20.0, cn in 0.0f64..5.0) {
            let model = gaussian_model(8, 12, 2, 0.0, 0.0, seed);
            let x = generate_bernoulli_signal(12, 2, &mut rng::stream(seed, 1)).unwrap();
            let levels = NoiseLevels { c_e: 10f64.powf(ce_db / 10.0), c_n: cn };
            let (se, sn) = levels.sigmas_for(model.a(), &x, 2);
            let model = model.with_noise(se, sn).unwrap();
            let gamma = ccrb_maximal(&model, &x).unwrap().gamma_ccrb;
            let rip = rip_constants(model.a(), 2, RipMode::Exhaustive).unwrap();
            let (lo, hi) = gamma_bounds(&rip, &levels, 2).unwrap();
            prop_assert!(lo <= gamma * (1.0 + 1e-12) && gamma <= hi * (1.0 + 1e-12), "{} {} {}", lo, gamma, hi);
        }
    }
}
