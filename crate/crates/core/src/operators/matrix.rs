use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("expected {expected} entries for a {rows}x{cols} matrix, got {found}")]
pub struct MatrixShapeError {
    pub rows: usize,
    pub cols: usize,
    pub expected: usize,
    pub found: usize,
}

/// Dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMatrix(DMatrix<Complex64>);

impl FiniteMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(
        rows: usize,
        cols: usize,
        entries: &[Complex64],
    ) -> Result<Self, MatrixShapeError> {
        if entries.len() != rows * cols {
            return Err(MatrixShapeError {
                rows,
                cols,
                expected: rows * cols,
                found: entries.len(),
            });
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, entries)))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<_> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.0[(i, j)] = v;
    }

    pub fn row_major(&self) -> Vec<Complex64> {
        (0..self.rows())
            .flat_map(|i| (0..self.cols()).map(move |j| (i, j)))
            .map(|(i, j)| self.0[(i, j)])
            .collect()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (&self.0 * v).iter().copied().collect()
    }
}

impl From<DMatrix<Complex64>> for FiniteMatrix {
    fn from(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }
}

impl fmt::Display for FiniteMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows() {
            let row: Vec<String> = (0..self.cols())
                .map(|j| format!("{}", self.get(i, j)))
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shape_is_checked() {
        assert!(FiniteMatrix::from_row_major(2, 2, &[c(1.0, 0.0)]).is_err());
        let m = FiniteMatrix::from_row_major(1, 2, &[c(1.0, 0.0), c(0.0, 2.0)]).unwrap();
        assert_eq!(m.get(0, 1), c(0.0, 2.0));
        assert_eq!(m.row_major(), vec![c(1.0, 0.0), c(0.0, 2.0)]);
    }

    #[test]
    fn adjoint_conjugates_and_transposes() {
        let m = FiniteMatrix::from_row_major(1, 2, &[c(1.0, 1.0), c(0.0, 2.0)]).unwrap();
        let a = m.adjoint();
        assert_eq!((a.rows(), a.cols()), (2, 1));
        assert_eq!(a.get(0, 0), c(1.0, -1.0));
        assert_eq!(a.get(1, 0), c(0.0, -2.0));
    }
}
