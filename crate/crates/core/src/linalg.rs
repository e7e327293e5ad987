//! Small dense linear-algebra helpers shared by the bound computations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative eigenvalue cutoff below which a symmetric matrix is treated as singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Eigenvalue cutoff (relative to the largest) for symmetric pseudo-inverses.
pub const PINV_RTOL: f64 = 1e-12;

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Extreme eigenvalues `(λ_min, λ_max)` of a symmetric matrix.
pub fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Singularity test: `λ_min ≤ 1e-12 · λ_max` (or a non-positive spectrum).
pub fn is_singular_symmetric(m: &DMatrix<f64>) -> bool {
    if m.nrows() == 0 {
        return false;
    }
    let (min, max) = extreme_eigenvalues(m);
    max <= 0.0 || min <= SINGULAR_RTOL * max
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix through its
/// eigendecomposition; eigenvalues with `|λ| ≤ rtol · max|λ|` are dropped.
pub fn pinv_symmetric(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let k = m.nrows();
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut out = DMatrix::zeros(k, k);
    if scale == 0.0 {
        return out;
    }
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= rtol * scale {
            continue;
        }
        let v = eig.eigenvectors.column(idx);
        out += (v * v.transpose()) / lambda;
    }
    symmetrize(&out)
}

/// Inverse of a symmetric positive-definite matrix through Cholesky.
/// Returns `None` when the matrix is numerically singular.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if is_singular_symmetric(m) {
        return None;
    }
    let chol = m.clone().cholesky()?;
    Some(symmetrize(&chol.inverse()))
}

/// `‖A - B‖_F / ‖B‖_F`.
pub fn frobenius_relative(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

/// Numerical rank of a (possibly rectangular) matrix, numpy `matrix_rank` style.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let tol = max * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Entries of `v` at `idx`.
pub fn gather(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pinv_of_invertible_matches_inverse() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let p = pinv_symmetric(&m, PINV_RTOL);
        let inv = m.clone().try_inverse().unwrap();
        assert_relative_eq!(p, inv, epsilon = 1e-12);
        assert_relative_eq!(spd_inverse(&m).unwrap(), inv, epsilon = 1e-12);
    }

    #[test]
    fn pinv_of_rank_one() {
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let m = &v * v.transpose();
        let p = pinv_symmetric(&m, PINV_RTOL);
        // (v vᵀ)† = v vᵀ / ‖v‖⁴
        assert_relative_eq!(p, &m / 25.0, epsilon = 1e-14);
        assert!(is_singular_symmetric(&m));
        assert!(spd_inverse(&m).is_none());
    }

    #[test]
    fn zero_matrix_pinv_is_zero() {
        let p = pinv_symmetric(&DMatrix::zeros(2, 2), PINV_RTOL);
        assert_eq!(p, DMatrix::zeros(2, 2));
    }

    #[test]
    fn rank_of_repeated_columns() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert_eq!(numerical_rank(&m), 1);
        assert_eq!(numerical_rank(&DMatrix::<f64>::identity(3, 3)), 3);
    }
}
