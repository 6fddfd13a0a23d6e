//! Thin SVD and the lifting of vector proximity maps to matrices.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// `X = U diag(sigma) V^T` with `r = min(p, q)` columns in `U` and `V`.
#[derive(Debug, Clone)]
pub struct SvdFactors<T> {
    pub u: Matrix<T>,
    /// Non-increasing, nonnegative.
    pub sigma: Vec<T>,
    pub v: Matrix<T>,
}

impl<T: Real> SvdFactors<T> {
    pub fn rank_capacity(&self) -> usize {
        self.sigma.len()
    }

    /// `U diag(values) V^T`.
    pub fn lift(&self, values: &[T]) -> Matrix<T> {
        lift(&self.u, values, &self.v)
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.lift(&self.sigma)
    }

    /// Largest singular value, zero for an empty matrix.
    pub fn spectral_norm(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }
}

fn lift<T: Real>(u: &Matrix<T>, values: &[T], v: &Matrix<T>) -> Matrix<T> {
    let (p, q) = (u.rows(), v.rows());
    let mut out = vec![T::zero(); p * q];
    for (k, &s) in values.iter().enumerate() {
        if s == T::zero() {
            continue;
        }
        let uk = u.col(k);
        for (j, &vjk) in v.col(k).iter().enumerate() {
            let w = s * vjk;
            if w == T::zero() {
                continue;
            }
            for (o, &ui) in out[j * p..(j + 1) * p].iter_mut().zip(uk) {
                *o = *o + ui * w;
            }
        }
    }
    Matrix::from_col_major(p, q, out)
}

fn check_finite<T: Real>(x: &Matrix<T>) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    Ok(())
}

/// Reorders columns so that `values` is non-increasing.
fn sort_pairs<T: Real>(values: Vec<T>, vecs: &[&Matrix<T>]) -> (Vec<T>, Vec<Matrix<T>>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite values"));
    let sorted = order.iter().map(|&k| values[k]).collect();
    let mats = vecs
        .iter()
        .map(|m| Matrix::from_fn(m.rows(), order.len(), |i, j| m.get(i, order[j])))
        .collect();
    (sorted, mats)
}

/// Thin SVD of a dense `p x q` matrix.
pub fn svd_thin<T: Real>(x: &Matrix<T>) -> Result<SvdFactors<T>> {
    check_finite(x)?;
    let (p, q) = (x.rows(), x.cols());
    let r = p.min(q);
    if r == 0 {
        return Ok(SvdFactors {
            u: Matrix::zeros(p, 0),
            sigma: Vec::new(),
            v: Matrix::zeros(q, 0),
        });
    }
    let (u, sigma, v) =
        T::dense_svd(x).ok_or_else(|| Error::numeric(format!("svd of {p}x{q} matrix did not converge"), 0))?;
    let sigma: Vec<T> = sigma.into_iter().map(|s| s.max(T::zero())).collect();
    let (sigma, mut mats) = sort_pairs(sigma, &[&u, &v]);
    let v = mats.pop().expect("v");
    let u = mats.pop().expect("u");
    Ok(SvdFactors { u, sigma, v })
}

/// Singular values, non-increasing.
pub fn singular_values<T: Real>(x: &Matrix<T>) -> Result<Vec<T>> {
    Ok(svd_thin(x)?.sigma)
}

/// Largest singular value.
pub fn spectral_norm<T: Real>(x: &Matrix<T>) -> Result<T> {
    Ok(svd_thin(x)?.spectral_norm())
}

fn apply_vector_prox<T, F>(sigma: &[T], vector_prox: &mut F) -> Result<Vec<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let values = vector_prox(sigma)?;
    if values.len() != sigma.len() {
        return Err(Error::ContractViolation(format!(
            "vector prox returned {} values for a spectrum of length {}",
            values.len(),
            sigma.len()
        )));
    }
    Ok(values)
}

/// Spectral lift `U diag(f(sigma(X))) V^T` of a vector map `f`.
///
/// `vector_prox` receives the spectrum sorted non-increasing.
pub fn spectral_prox<T, F>(x: &Matrix<T>, mut vector_prox: F) -> Result<Matrix<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Vec<T>>,
{
    let svd = svd_thin(x)?;
    let values = apply_vector_prox(&svd.sigma, &mut vector_prox)?;
    Ok(svd.lift(&values))
}
