//! Small dense helpers for the T×T ability covariance.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

fn to_matrix(a: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::Parameters("covariance matrix is not square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| a[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn spd_factor(a: &[Vec<f64>]) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let m = to_matrix(a)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    m.cholesky().ok_or(Error::NotPositiveDefinite)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    Ok(to_rows(&spd_factor(a)?.l()))
}

/// `L Lᵀ` for a lower-triangular `L`.
pub fn outer_lower(l: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = l.len();
    let m = lower(l);
    let s = &m * m.transpose();
    // Exact symmetry regardless of summation order.
    let mut rows = to_rows(&s);
    for i in 0..n {
        for j in 0..i {
            rows[j][i] = rows[i][j];
        }
    }
    rows
}

fn lower(l: &[Vec<f64>]) -> DMatrix<f64> {
    let n = l.len();
    DMatrix::from_fn(n, n, |i, j| if j <= i { l[i][j] } else { 0.0 })
}

/// Solve `L z = v` for lower-triangular `L`.
pub fn forward_substitute(l: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let z = lower(l).solve_lower_triangular(&DVector::from_column_slice(v)).expect("non-singular factor");
    z.iter().copied().collect()
}

/// Solve `Lᵀ x = z` for lower-triangular `L`.
pub fn backward_substitute_transposed(l: &[Vec<f64>], z: &[f64]) -> Vec<f64> {
    let x = lower(l)
        .tr_solve_lower_triangular(&DVector::from_column_slice(z))
        .expect("non-singular factor");
    x.iter().copied().collect()
}

/// Inverse of an SPD matrix via its Cholesky factor.
pub fn spd_inverse(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    Ok(to_rows(&spd_factor(a)?.inverse()))
}

/// `Σ log L_ii`, i.e. half the log-determinant.
pub fn half_log_det(l: &[Vec<f64>]) -> f64 {
    (0..l.len()).map(|i| l[i][i].ln()).sum()
}
