//! Lower bounds for sparse estimation when both the sensing matrix and the
//! measurement are corrupted by additive Gaussian noise.
//!
//! The measurement model is `y = (A + E) x + n` with `E` iid `N(0, σ_e²)` and
//! `n ~ N(0, σ_n² I)`. Marginalising over `E` gives `y ~ N(Ax, σ_x² I)` with
//! `σ_x² = σ_e² ‖x‖² + σ_n²`, so the noise level depends on the parameter.
//!
//! Modules:
//!
//! - [`model`]: problem definition, random instances, measurement sampling.
//! - [`fisher`]: closed-form Fisher information and a score-sampling oracle.
//! - [`ccrb`]: constrained Cramér-Rao bounds, the correction-ratio sandwich and
//!   restricted-isometry style constants.
//! - [`hcrb`]: Hammersley-Chapman-Robbins bounds, general and unit-matrix closed form.
//! - [`estimators`]: reference estimators compared against the bounds.
//! - [`montecarlo`]: reproducible (parallel) trial harness.
//! - [`experiments`]: the figure and table protocols producing plot-ready points.

pub mod ccrb;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod fisher;
pub mod hcrb;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod rng;

pub use error::{Error, Result};
pub use model::{Measurement, ProblemModel, SensingMatrix, SparseSignal};
