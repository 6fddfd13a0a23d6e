//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use faer::MatRef;
use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::matrix::Matrix;

/// Real scalar: `f32` or `f64`.
///
/// The dense SVD kernel is reached through this trait so that generic code only
/// ever sees `num_traits::Float` methods.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Debug
    + Display
    + Default
    + Sum
    + for<'a> Sum<&'a Self>
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    fn of(x: f64) -> Self;

    /// Thin SVD `(U, sigma, V)` of a dense matrix; `None` when the backend
    /// does not converge.
    #[doc(hidden)]
    fn dense_svd(m: &Matrix<Self>) -> Option<(Matrix<Self>, Vec<Self>, Matrix<Self>)>;

}

fn to_matrix<T: Real>(m: MatRef<'_, T>) -> Matrix<T> {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            fn dense_svd(m: &Matrix<Self>) -> Option<(Matrix<Self>, Vec<Self>, Matrix<Self>)> {
                let a = MatRef::from_column_major_slice(m.as_slice(), m.rows(), m.cols());
                let svd = a.thin_svd().ok()?;
                Some((to_matrix(svd.U()), svd.S().column_vector().iter().copied().collect(), to_matrix(svd.V())))
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Lossy conversion to `f64`, used for reporting and RNG-driven generation.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
