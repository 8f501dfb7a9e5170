//! Small dense linear algebra on row-major `Vec<Vec<_>>` storage and
//! `nalgebra` matrices.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::jet::Jet;
use crate::error::{Error, Result};

/// Scalars an LU factorisation can run on.
pub trait Field:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Pivot magnitude.
    fn magnitude(&self) -> f64;
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Field for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Field for Jet {
    fn zero() -> Self {
        Jet::constant(0.0)
    }
    fn one() -> Self {
        Jet::constant(1.0)
    }
    fn magnitude(&self) -> f64 {
        self.v.abs()
    }
}

/// Determinant by LU factorisation with partial pivoting.
///
/// Pivots are chosen on the magnitude of the value part, so for [`Jet`]
/// entries the derivative parts follow the same elimination sequence.
pub fn det_lu<T: Field>(mut a: Vec<Vec<T>>) -> T {
    let n = a.len();
    let mut det = T::one();
    for k in 0..n {
        let (p, best) = (k..n)
            .map(|i| (i, a[i][k].magnitude()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        // a zero final pivot needs no division; for jets its derivatives still matter
        if best == 0.0 && k + 1 < n {
            return T::zero();
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        let pivot = a[k][k];
        det = det * pivot;
        for i in (k + 1)..n {
            let factor = a[i][k] / pivot;
            for j in (k + 1)..n {
                let delta = factor * a[k][j];
                a[i][j] = a[i][j] - delta;
            }
        }
    }
    det
}

/// Solve `x A = b` for a row vector `x`.
pub fn solve_left(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let at = a.transpose();
    let rhs = nalgebra::DVector::from_column_slice(b);
    at.lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::numerical("singular linear system"))
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// 1-norm condition number estimate from an explicit inverse.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let norm1 = |m: &DMatrix<f64>| {
        (0..m.ncols())
            .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    match a.clone().try_inverse() {
        Some(inv) => norm1(a) * norm1(&inv),
        None => f64::INFINITY,
    }
}

pub fn sup_norm(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn to_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| a.row(i).iter().copied().collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_matches_nalgebra() {
        let rows = vec![
            vec![0.0, 2.0, 1.0],
            vec![1.0, -1.0, 3.0],
            vec![4.0, 0.5, -2.0],
        ];
        let expected = from_rows(&rows).determinant();
        assert!((det_lu(rows) - expected).abs() < 1e-12);
    }

    #[test]
    fn singular_is_zero() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(det_lu(rows).abs() < 1e-15);
    }

    #[test]
    fn jet_determinant_derivative() {
        // det [[x, 1], [x^2, 3]] = 3x - x^2 ; d/dx = 3 - 2x ; d2 = -2
        let x = Jet::variable(0.7);
        let one = Jet::constant(1.0);
        let d = det_lu(vec![vec![x, one], vec![x * x, Jet::constant(3.0)]]);
        assert!((d.v - (2.1 - 0.49)).abs() < 1e-14);
        assert!((d.d1 - (3.0 - 1.4)).abs() < 1e-14);
        assert!((d.d2 + 2.0).abs() < 1e-14);
    }
}
