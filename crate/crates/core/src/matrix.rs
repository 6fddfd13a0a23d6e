//! Minimal column-major dense matrix.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense real matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Wraps column-major data.
    ///
    /// # Panics
    /// If `data.len() != rows * cols`.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from row-major nested rows; convenient in tests and examples.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        Ok(Self::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// `rows x cols` matrix with ones on the leading diagonal.
    pub fn eye(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn diag(values: &[T]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { T::zero() })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i + self.rows * j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i + self.rows * j] = value;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != rhs.rows {
            return Err(Error::invalid(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = rhs.get(k, j);
                if b == T::zero() {
                    continue;
                }
                for (d, &a) in dst.iter_mut().zip(self.col(k)) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `A^T A` for this matrix `A`.
    pub fn gram(&self) -> Matrix<T> {
        let n = self.cols;
        let mut out = Matrix::zeros(n, n);
        for a in 0..n {
            for b in 0..=a {
                let s: T = self
                    .col(a)
                    .iter()
                    .zip(self.col(b))
                    .map(|(&x, &y)| x * y)
                    .sum();
                out.set(a, b, s);
                out.set(b, a, s);
            }
        }
        out
    }

    /// `A A^T` for this matrix `A`.
    pub fn outer_gram(&self) -> Matrix<T> {
        let n = self.rows;
        let mut acc = vec![T::zero(); n * n];
        for j in 0..self.cols {
            let c = self.col(j);
            for b in 0..n {
                let cb = c[b];
                if cb == T::zero() {
                    continue;
                }
                let dst = &mut acc[b * n..b * n + b + 1];
                for (d, &ca) in dst.iter_mut().zip(&c[..=b]) {
                    *d = *d + ca * cb;
                }
            }
        }
        for b in 0..n {
            for a in 0..b {
                acc[a * n + b] = acc[b * n + a];
            }
        }
        Matrix::from_col_major(n, n, acc)
    }

    pub fn scale(&self, s: T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn sub(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::invalid("matrix shapes differ"));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, rhs: &Matrix<T>) -> T {
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}
