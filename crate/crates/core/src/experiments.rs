//! Figure and table protocols.
//!
//! Every protocol returns plot-ready [`Point`]s; a figure is the set of points
//! sharing a `curve_id`. Noise levels given in dB are `10 log10(c)`, so
//! `-inf` dB is a level of zero.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::ccrb::{self, gamma_approx, transition_ce, NoiseLevels};
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::hcrb;
use crate::model::{generate_bernoulli_signal, generate_gaussian_matrix, ProblemModel, SensingMatrix, SparseSignal};
use crate::montecarlo::{self, run_trials};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x_value: f64,
    pub curve_id: String,
    pub value: f64,
    /// Monte Carlo standard error; `None` for analytic values.
    pub std_error: Option<f64>,
}

impl Point {
    fn exact(x_value: f64, curve_id: impl Into<String>, value: f64) -> Self {
        Point { x_value, curve_id: curve_id.into(), value, std_error: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    /// `γ(c_e, c_n)` against `c_e` for several `c_n`.
    Fig3,
    /// Simulated `γ_CCRB` against `c_e` next to the approximation.
    Fig4,
    /// Simulated `γ_CCRB` against `s`.
    Fig5,
    /// `d_HCRB / (n − s)` against `σ_e²` at large `x_q`.
    HcrbSweep,
    /// `d_HCRB` against `x_q`.
    XqSweep,
    /// Estimator MSE against `σ_n` next to the HCRB and CCRB.
    Estimators,
    /// Least squares versus the noise-exploiting estimator.
    Table1,
}

impl FigureId {
    pub const ALL: [FigureId; 7] = [
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::HcrbSweep,
        FigureId::XqSweep,
        FigureId::Estimators,
        FigureId::Table1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::HcrbSweep => "fig6",
            FigureId::XqSweep => "fig7",
            FigureId::Estimators => "fig-estimators",
            FigureId::Table1 => "table1",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fig3" => FigureId::Fig3,
            "fig4" => FigureId::Fig4,
            "fig5" => FigureId::Fig5,
            "fig6" | "hcrb-sweep" => FigureId::HcrbSweep,
            "fig7" | "xq-sweep" => FigureId::XqSweep,
            "fig-estimators" => FigureId::Estimators,
            "table1" => FigureId::Table1,
            other => return Err(Error::InvalidInput(format!("unknown figure '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureConfig {
    pub seed: u64,
    /// Monte Carlo trials per point (estimator figures, table).
    pub trials: usize,
    /// Random `(A, x)` instances per point (`γ_CCRB` figures).
    pub instances: usize,
    /// Points on continuous grids.
    pub grid_points: usize,
    /// Sparsities for the `s` sweeps; `None` uses each figure's default.
    pub s_values: Option<Vec<usize>>,
    /// `σ_e` values for the estimator and `x_q` figures; `None` uses defaults.
    pub sigma_e_values: Option<Vec<f64>>,
}

impl Default for FigureConfig {
    fn default() -> Self {
        FigureConfig { seed: 1, trials: 10_000, instances: 5, grid_points: 25, s_values: None, sigma_e_values: None }
    }
}

impl FigureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.instances == 0 || self.grid_points == 0 {
            return Err(Error::InvalidInput("trials, instances and grid_points must be >= 1".into()));
        }
        if matches!(&self.s_values, Some(v) if v.is_empty() || v.contains(&0)) {
            return Err(Error::InvalidInput("s values must be nonempty and positive".into()));
        }
        if matches!(&self.sigma_e_values, Some(v) if v.is_empty() || v.iter().any(|s| !(*s >= 0.0))) {
            return Err(Error::InvalidInput("sigma_e values must be nonempty and >= 0".into()));
        }
        Ok(())
    }
}

/// `points` values spaced evenly in `log10` from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..points).map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)).collect()
}

/// `points` values evenly spaced from `lo` to `hi`.
pub fn lin_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn db_label(db: f64) -> String {
    if db == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{db}")
    }
}

pub fn run_figure(id: FigureId, cfg: &FigureConfig) -> Result<Vec<Point>> {
    cfg.validate()?;
    match id {
        FigureId::Fig3 => Ok(gamma_curves(10, &[f64::NEG_INFINITY, -10.0, 0.0, 10.0], cfg.grid_points)),
        FigureId::Fig4 => gamma_vs_ce(cfg, 10, &[f64::NEG_INFINITY, -5.0, 15.0]),
        FigureId::Fig5 => {
            let s_values = cfg.s_values.clone().unwrap_or_else(|| vec![3, 10, 30, 100]);
            gamma_vs_s(cfg, &s_values, &[-15.0, -5.0, 5.0], &[f64::NEG_INFINITY, -15.0, -5.0])
        }
        FigureId::HcrbSweep => {
            let s_values = cfg.s_values.clone().unwrap_or_else(|| vec![1, 3, 10, 30, 100]);
            hcrb_sigma_e_sweep(&s_values, 0.1, 1000.0, cfg.grid_points)
        }
        FigureId::XqSweep => {
            let se = cfg.sigma_e_values.clone().unwrap_or_else(|| vec![0.01, 0.1, 0.5, 1.0, 2.0]);
            hcrb_xq_sweep(10, 0.1, &se, cfg.grid_points)
        }
        FigureId::Estimators => {
            let se = cfg.sigma_e_values.clone().unwrap_or_else(|| vec![0.1, 1.0]);
            estimators_vs_sigma_n(cfg, 5, &se, &log_grid(1e-3, 10.0, cfg.grid_points))
        }
        FigureId::Table1 => table1(cfg, 10_000, 0.01),
    }
}

/// `γ(c_e, c_n)` over `c_e ∈ [−20, 20]` dB, one curve per `c_n`, each
/// including its transition point `c_{e,t}(c_n)`.
pub fn gamma_curves(s: usize, cn_db: &[f64], points: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for &cn in cn_db {
        let c_n = from_db(cn);
        let mut grid: Vec<f64> = lin_grid(-20.0, 20.0, points).into_iter().map(from_db).collect();
        grid.push(transition_ce(c_n));
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let id = format!("approx:cn={}dB", db_label(cn));
        out.extend(grid.into_iter().map(|c_e| Point::exact(c_e, id.clone(), gamma_approx(c_e, c_n, s))));
    }
    out
}

/// Draws `A ~ N(0, 1/m)` (`m = 10s`, `n = 20s`) and a Bernoulli `±1` signal.
pub fn random_instance(s: usize, stream_seed: u64, index: u64) -> Result<(SensingMatrix, SparseSignal)> {
    let (m, n) = (10 * s, 20 * s);
    let mut r = rng::stream(stream_seed, index);
    let a = generate_gaussian_matrix(m, n, &mut r);
    let x = generate_bernoulli_signal(n, s, &mut r)?;
    Ok((SensingMatrix::Dense(a), x))
}

/// `γ_CCRB` of `signal` on `a` with `σ_e, σ_n` chosen to hit `(c_e, c_n)`.
pub fn gamma_at_levels(
    a: &std::sync::Arc<SensingMatrix>,
    signal: &SparseSignal,
    s: usize,
    c_e: f64,
    c_n: f64,
) -> Result<f64> {
    let (se, sn) = NoiseLevels { c_e, c_n }.sigmas_for(a, signal, s);
    let model = ProblemModel::from_shared(a.clone(), se, sn, s)?;
    Ok(ccrb::ccrb_maximal(&model, signal)?.gamma_ccrb)
}

/// Raw `γ_CCRB` points (one per instance) and the approximation against `c_e`.
pub fn gamma_vs_ce(cfg: &FigureConfig, s: usize, cn_db: &[f64]) -> Result<Vec<Point>> {
    let ce_db = lin_grid(-20.0, 20.0, cfg.grid_points);
    let instances: Vec<_> = (0..cfg.instances as u64)
        .map(|k| random_instance(s, rng::derive_seed(cfg.seed, 4), k).map(|(a, x)| (std::sync::Arc::new(a), x)))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for &cn in cn_db {
        let c_n = from_db(cn);
        let tag = format!("cn={}dB", db_label(cn));
        for &ce in &ce_db {
            let c_e = from_db(ce);
            for (a, x) in &instances {
                out.push(Point::exact(c_e, format!("sim:{tag}"), gamma_at_levels(a, x, s, c_e, c_n)?));
            }
            out.push(Point::exact(c_e, format!("approx:{tag}"), gamma_approx(c_e, c_n, s)));
        }
    }
    Ok(out)
}

/// Mean `γ_CCRB` over `cfg.instances` draws against `s`, with the approximation.
///
/// The instances for a given `s` are shared by every `(c_e, c_n)` pair.
pub fn gamma_vs_s(cfg: &FigureConfig, s_values: &[usize], ce_db: &[f64], cn_db: &[f64]) -> Result<Vec<Point>> {
    let base = rng::derive_seed(cfg.seed, 5);
    let mut out = Vec::new();
    for (i, &s) in s_values.iter().enumerate() {
        let instances: Vec<_> = (0..cfg.instances as u64)
            .map(|k| random_instance(s, base, ((i as u64) << 32) | k).map(|(a, x)| (std::sync::Arc::new(a), x)))
            .collect::<Result<_>>()?;
        for &cn in cn_db {
            for &ce in ce_db {
                let (c_e, c_n) = (from_db(ce), from_db(cn));
                let tag = format!("cn={}dB:ce={}dB", db_label(cn), db_label(ce));
                let gammas: Vec<f64> =
                    instances.iter().map(|(a, x)| gamma_at_levels(a, x, s, c_e, c_n)).collect::<Result<_>>()?;
                let (mean, se) = mean_and_std_error(&gammas);
                out.push(Point { x_value: s as f64, curve_id: format!("sim:{tag}"), value: mean, std_error: Some(se) });
                out.push(Point::exact(s as f64, format!("approx:{tag}"), gamma_approx(c_e, c_n, s)));
            }
        }
    }
    Ok(out)
}

fn mean_and_std_error(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn flat_signal(n: usize, s: usize, xq: f64) -> Result<SparseSignal> {
    let support: Vec<usize> = (0..s).collect();
    SparseSignal::from_parts(n, &support, &vec![xq; s])
}

/// `d_HCRB / (n − s)` against `σ_e²` on `[1e−4, 1e2]`, identity matrix with `n = 10s`.
pub fn hcrb_sigma_e_sweep(s_values: &[usize], sigma_n: f64, xq: f64, points: usize) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for &s in s_values {
        let n = 10 * s;
        let x = flat_signal(n, s, xq)?;
        for se2 in log_grid(1e-4, 1e2, points) {
            let model = ProblemModel::identity(n, se2.sqrt(), sigma_n, s)?;
            let d = hcrb::d_hcrb(&model, &x)?;
            out.push(Point::exact(se2, format!("s={s}"), d / (n - s) as f64));
        }
    }
    Ok(out)
}

/// `d_HCRB` against `x_q ∈ [1e−3, 1e3]` for `s = 1`, one curve per `σ_e`.
pub fn hcrb_xq_sweep(n: usize, sigma_n: f64, sigma_e: &[f64], points: usize) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for &se in sigma_e {
        let model = ProblemModel::identity(n, se, sigma_n, 1)?;
        for xq in log_grid(1e-3, 1e3, points) {
            let d = hcrb::d_hcrb(&model, &flat_signal(n, 1, xq)?)?;
            out.push(Point::exact(xq, format!("se={se}"), d));
        }
    }
    Ok(out)
}

/// MSE of the ML and locally unbiased estimators at `x = e_1`, `s = 1`,
/// against `σ_n`, with the HCRB and CCRB.
pub fn estimators_vs_sigma_n(cfg: &FigureConfig, n: usize, sigma_e: &[f64], sigma_n: &[f64]) -> Result<Vec<Point>> {
    let x = flat_signal(n, 1, 1.0)?;
    let specs = [EstimatorSpec::MaximumLikelihood { s: 1 }, EstimatorSpec::LocallyUnbiased { x0: x.clone() }];
    let mut out = Vec::new();
    for (i, &se) in sigma_e.iter().enumerate() {
        let rows = montecarlo::sweep(
            sigma_n,
            |sn| ProblemModel::identity(n, se, sn, 1),
            |_| Ok(x.clone()),
            &specs,
            cfg.trials,
            rng::derive_seed(cfg.seed, 60 + i as u64),
        )?;
        let tag = format!("se={se}");
        for row in rows {
            let summary = row.summary.as_ref().expect("estimator rows carry a summary");
            out.push(Point {
                x_value: row.x_value,
                curve_id: format!("{}:{tag}", row.estimator.unwrap_or("none")),
                value: summary.mse,
                std_error: Some(summary.std_error_mse),
            });
            // bounds once per grid value
            if row.estimator == Some(specs[0].name()) {
                out.push(Point::exact(row.x_value, format!("ccrb:{tag}"), row.ccrb));
                if let Some(h) = row.hcrb {
                    out.push(Point::exact(row.x_value, format!("hcrb:{tag}"), h));
                }
            }
        }
    }
    Ok(out)
}

/// Least squares (`x̂_k̂ = y_k̂`) against `Σ y² / (2 y_k̂)` at `x = e_1`, `σ_n = 0`.
pub fn table1(cfg: &FigureConfig, n: usize, sigma_e: f64) -> Result<Vec<Point>> {
    let x = SparseSignal::new({
        let mut v = DVector::zeros(n);
        v[0] = 1.0;
        v
    })?;
    let model = ProblemModel::identity(n, sigma_e, 0.0, 1)?;
    let seed = rng::derive_seed(cfg.seed, 7);
    // both estimators see the same measurements
    let ls = run_trials(&model, &x, &EstimatorSpec::MaximumLikelihood { s: 1 }, cfg.trials, seed)?;
    let ne = run_trials(&model, &x, &EstimatorSpec::NoiseExploiting, cfg.trials, seed)?;
    Ok(vec![
        Point::exact(1.0, "least_squares_theoretical", sigma_e * sigma_e * x.norm_squared()),
        Point {
            x_value: 2.0,
            curve_id: "least_squares_empirical".into(),
            value: ls.mse,
            std_error: Some(ls.std_error_mse),
        },
        Point {
            x_value: 3.0,
            curve_id: "noise_exploiting_empirical".into(),
            value: ne.mse,
            std_error: Some(ne.std_error_mse),
        },
    ])
}
