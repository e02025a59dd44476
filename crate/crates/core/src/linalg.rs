//! Small dense symmetric-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("empty matrix")]
    Empty,
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Largest entry of `|M - M^T|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Rejects non-square matrices and asymmetry above `1e-12 * max(1, max|M|)`.
pub fn check_symmetric(m: &DMatrix<f64>) -> Result<(), LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
    }
    if m.nrows() == 0 {
        return Err(LinalgError::Empty);
    }
    let asym = asymmetry(m);
    if asym > 1e-12 * max_abs(m).max(1.0) {
        return Err(LinalgError::NotSymmetric(asym));
    }
    Ok(())
}

/// `(M + M^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest eigenvalue and a unit eigenvector of a symmetric matrix.
pub fn lambda_max_vec(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>), LinalgError> {
    check_symmetric(m)?;
    let eig = SymmetricEigen::new(symmetrize(m));
    let (idx, lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    Ok((lam, eig.eigenvectors.column(idx).into_owned()))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn lambda_max(m: &DMatrix<f64>) -> Result<f64, LinalgError> {
    lambda_max_vec(m).map(|(l, _)| l)
}

/// Largest eigenvalue without the symmetry check; the argument is symmetrized.
pub fn lambda_max_unchecked(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    if m.nrows() == 2 {
        let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
        return 0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b * b).sqrt();
    }
    SymmetricEigen::new(symmetrize(m)).eigenvalues.max()
}

/// Smallest eigenvalue without the symmetry check.
pub fn lambda_min_unchecked(m: &DMatrix<f64>) -> f64 {
    -lambda_max_unchecked(&(-m))
}

/// Spectral norm of a general matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Trace of `A * B` for square matrices of equal size.
pub fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}
