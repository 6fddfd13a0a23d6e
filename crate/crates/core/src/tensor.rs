//! Dense N-order tensors and their matricizations.
//!
//! Values are stored in a single flat vector with the first mode varying
//! fastest: the entry at 1-based multi-index `(i_1, ..., i_N)` lives at
//! `sum_n (i_n - 1) * s_n` with `s_1 = 1` and `s_{n+1} = s_n * p_n`.
//!
//! The mode-`n` unfolding is a `p_n x J_n` matrix (`J_n = prod_{k != n} p_k`).
//! Row `i_n - 1` holds the entries with that mode-`n` index; the column of an
//! entry is the linear index of the remaining indices `(i_1, .., i_{n-1},
//! i_{n+1}, .., i_N)` in the same first-fastest order. With `L = prod_{k<n} p_k`
//! an entry at flat position `a + L * (i + p_n * b)` maps to row `i`, column
//! `a + L * b`.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Dimensions `(p_1, ..., p_N)` of a tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::invalid("shape must have at least one mode"));
        }
        if dims.iter().any(|&p| p == 0) {
            return Err(Error::invalid(format!("zero-sized mode in shape {dims:?}")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &p| acc.checked_mul(p))
            .ok_or_else(|| Error::invalid("shape element count overflows"))?;
        Ok(Shape { dims })
    }

    /// Number of modes `N`.
    #[inline]
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total number of entries.
    #[inline]
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `p_mode` for a 1-based mode.
    pub fn dim(&self, mode: usize) -> Result<usize> {
        self.check_mode(mode)?;
        Ok(self.dims[mode - 1])
    }

    /// `J_mode = prod_{k != mode} p_k`.
    pub fn complement_len(&self, mode: usize) -> Result<usize> {
        Ok(self.len() / self.dim(mode)?)
    }

    pub fn p_min(&self) -> usize {
        *self.dims.iter().min().expect("non-empty shape")
    }

    pub fn p_max(&self) -> usize {
        *self.dims.iter().max().expect("non-empty shape")
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode == 0 || mode > self.order() {
            return Err(Error::invalid(format!(
                "mode {mode} out of range 1..={}",
                self.order()
            )));
        }
        Ok(())
    }

    /// Flat offset of a 1-based multi-index.
    pub fn linear_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order() {
            return Err(Error::invalid(format!(
                "index has {} components, shape has {} modes",
                index.len(),
                self.order()
            )));
        }
        let mut offset = 0;
        let mut stride = 1;
        for (&i, &p) in index.iter().zip(&self.dims) {
            if i == 0 || i > p {
                return Err(Error::invalid(format!("index {index:?} outside shape {self}")));
            }
            offset += (i - 1) * stride;
            stride *= p;
        }
        Ok(offset)
    }

    /// 1-based multi-index of a flat offset.
    pub fn multi_index(&self, mut offset: usize) -> Vec<usize> {
        debug_assert!(offset < self.len());
        self.dims
            .iter()
            .map(|&p| {
                let i = offset % p;
                offset /= p;
                i + 1
            })
            .collect()
    }

    /// `(L, p_mode, R)`: products of the dimensions before and after the mode.
    fn split_at_mode(&self, mode: usize) -> (usize, usize, usize) {
        let left = self.dims[..mode - 1].iter().product();
        let right = self.dims[mode..].iter().product();
        (left, self.dims[mode - 1], right)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Mode-`n` unfolding of a tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Matricization<T> {
    /// 1-based mode.
    pub mode: usize,
    pub matrix: Matrix<T>,
}

/// Dense N-order tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor<T> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Real> DenseTensor<T> {
    pub fn zeros(shape: Shape) -> Self {
        let data = vec![T::zero(); shape.len()];
        DenseTensor { shape, data }
    }

    pub fn from_vec(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::invalid(format!(
                "{} values for shape {shape} ({} entries)",
                data.len(),
                shape.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    /// Fills entries from a function of the 1-based multi-index.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let data = (0..shape.len())
            .map(|k| f(&shape.multi_index(k)))
            .collect();
        DenseTensor { shape, data }
    }

    #[inline]
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> Result<T> {
        Ok(self.data[self.shape.linear_index(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: T) -> Result<()> {
        let k = self.shape.linear_index(index)?;
        self.data[k] = value;
        Ok(())
    }

    pub fn unfold(&self, mode: usize) -> Result<Matricization<T>> {
        self.shape.check_mode(mode)?;
        let (left, p, right) = self.shape.split_at_mode(mode);
        let cols = left * right;
        let mut out = vec![T::zero(); p * cols];
        for b in 0..right {
            for i in 0..p {
                let src = &self.data[left * (i + p * b)..left * (i + p * b + 1)];
                for (a, &x) in src.iter().enumerate() {
                    out[i + p * (a + left * b)] = x;
                }
            }
        }
        Ok(Matricization {
            mode,
            matrix: Matrix::from_col_major(p, cols, out),
        })
    }

    pub fn fold(m: &Matricization<T>, shape: &Shape) -> Result<Self> {
        shape.check_mode(m.mode)?;
        let (left, p, right) = shape.split_at_mode(m.mode);
        if m.matrix.rows() != p || m.matrix.cols() != left * right {
            return Err(Error::invalid(format!(
                "{}x{} matrix cannot fold into mode {} of {shape}",
                m.matrix.rows(),
                m.matrix.cols(),
                m.mode
            )));
        }
        let src = m.matrix.as_slice();
        let mut data = vec![T::zero(); shape.len()];
        for b in 0..right {
            for i in 0..p {
                let dst = &mut data[left * (i + p * b)..left * (i + p * b + 1)];
                for (a, d) in dst.iter_mut().enumerate() {
                    *d = src[i + p * (a + left * b)];
                }
            }
        }
        Ok(DenseTensor {
            shape: shape.clone(),
            data,
        })
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(T::one(), other, -T::one())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(T::one(), other, T::one())
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// `||self - other||_2`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Reorders modes: output mode `k` is input mode `perm[k]` (both 1-based).
    pub fn permute_modes(&self, perm: &[usize]) -> Result<Self> {
        let n = self.shape.order();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&m| m == 0 || m > n || std::mem::replace(&mut seen[m - 1], true))
        {
            return Err(Error::invalid(format!("{perm:?} is not a permutation of 1..={n}")));
        }
        let dims: Vec<usize> = perm.iter().map(|&m| self.shape.dims[m - 1]).collect();
        let shape = Shape::new(dims)?;
        let mut src_index = vec![0; n];
        Ok(DenseTensor::from_fn(shape, |idx| {
            for (k, &m) in perm.iter().enumerate() {
                src_index[m - 1] = idx[k];
            }
            self.data[self
                .shape
                .linear_index(&src_index)
                .expect("permuted index in range")]
        }))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::invalid(format!(
                "shape mismatch: {} vs {}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }
}
