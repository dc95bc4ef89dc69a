//! Small dense linear-algebra helpers shared by the theory and model layers.

use nalgebra::{DMatrix, DVector};

use crate::error::{IlmsError, Result};

/// Largest eigenvalue magnitude of a (possibly nonsymmetric) square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Relative asymmetry check: max |a_ij - a_ji| against the largest entry.
pub fn is_symmetric(a: &DMatrix<f64>, rel_tol: f64) -> bool {
    let scale = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigendecomposition of a symmetric matrix with eigenvalues in ascending
/// order and eigenvector columns permuted to match.
pub fn sorted_symmetric_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = symmetrize(a).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Symmetric PSD square root via eigendecomposition. Slightly negative
/// eigenvalues from roundoff are clamped to zero; genuinely negative ones are
/// an error. Handles the zero matrix.
pub fn psd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = sorted_symmetric_eigen(a);
    let scale = values.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let mut roots = DVector::zeros(values.len());
    for (i, &v) in values.iter().enumerate() {
        if v < -1e-10 * scale {
            return Err(IlmsError::Numerical(format!(
                "matrix is not positive semidefinite (eigenvalue {v:.3e})"
            )));
        }
        roots[i] = v.max(0.0).sqrt();
    }
    Ok(&vectors * DMatrix::from_diagonal(&roots) * vectors.transpose())
}

/// 2-norm condition number from singular values; +inf for a singular matrix.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0f64, |acc, &x| acc.max(x));
    let min = sv.iter().fold(f64::INFINITY, |acc, &x| acc.min(x));
    if min <= 0.0 { f64::INFINITY } else { max / min }
}

/// Solve `a x = b` by LU, also reporting cond(a) so callers can attach
/// ill-conditioning warnings to derived predictions.
pub fn solve_with_condition(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let cond = condition_number(a);
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or_else(|| IlmsError::Numerical("linear system is singular".into()))?;
    Ok((x, cond))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_radius_of_rotation_like_matrix() {
        // Complex eigenvalue pair 1 ± 2i, magnitude sqrt(5).
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 2.0, 1.0]);
        assert_relative_eq!(spectral_radius(&a), 5.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn sorted_eigen_ascending_and_reconstructs() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let (vals, vecs) = sorted_symmetric_eigen(&a);
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
        let rebuilt = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert_relative_eq!(rebuilt, a, epsilon = 1e-10);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let r = psd_sqrt(&a).unwrap();
        assert_relative_eq!(&r * &r, a, epsilon = 1e-12);
    }

    #[test]
    fn psd_sqrt_of_zero_is_zero() {
        let z = DMatrix::zeros(3, 3);
        assert_eq!(psd_sqrt(&z).unwrap(), z);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(psd_sqrt(&a).is_err());
    }

    #[test]
    fn solve_reports_condition() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_row_slice(&[6.0, 2.0]);
        let (x, cond) = solve_with_condition(&a, &b).unwrap();
        assert_relative_eq!(x[0], 2.0, max_relative = 1e-14);
        assert_relative_eq!(x[1], 2.0, max_relative = 1e-14);
        assert_relative_eq!(cond, 3.0, max_relative = 1e-12);
    }
}
