//! Regularizer values, the `alpha` estimator, synthetic Tucker data and the
//! counterexample tensors on which the envelope regularizer beats the trace
//! norm.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::admm::ObservationSet;
use crate::error::{Error, Result};
use crate::gauge::envelope_lower_bound;
use crate::matrix::Matrix;
use crate::scalar::{to_f64, Real};
use crate::spectral::{singular_values, spectral_norm};
use crate::tensor::{DenseTensor, Matricization, Shape};

/// Default relative threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-8;

/// `(1/N) sum_n ||W_(n)||_tr`.
pub fn tensor_trace_norm<T: Real>(w: &DenseTensor<T>) -> Result<T> {
    let n = w.shape().order();
    let mut total = T::zero();
    for mode in 1..=n {
        total = total + singular_values(&w.unfold(mode)?.matrix)?.into_iter().sum::<T>();
    }
    Ok(total / T::of(n as f64))
}

/// Numerical rank of every matricization: singular values above
/// `rank_tol * sigma_max` of that mode.
pub fn mode_ranks<T: Real>(w: &DenseTensor<T>, rank_tol: T) -> Result<Vec<usize>> {
    (1..=w.shape().order())
        .map(|mode| {
            let s = singular_values(&w.unfold(mode)?.matrix)?;
            let cut = rank_tol * s.first().copied().unwrap_or_else(T::zero);
            Ok(s.iter().filter(|&&x| x > cut).count())
        })
        .collect()
}

/// `R(W) = (1/N) sum_n rank(W_(n))`, kept exact.
pub fn tensor_rank<T: Real>(w: &DenseTensor<T>, rank_tol: T) -> Result<Ratio<usize>> {
    let ranks = mode_ranks(w, rank_tol)?;
    Ok(Ratio::new(ranks.iter().sum(), ranks.len()))
}

/// `(1/N) sum_n` of the envelope lower bound on each mode spectrum.
pub fn envelope_regularizer_lower_bound<T: Real>(w: &DenseTensor<T>, alpha: T, k: T) -> Result<T> {
    let n = w.shape().order();
    let mut total = T::zero();
    for mode in 1..=n {
        let s = singular_values(&w.unfold(mode)?.matrix)?;
        total = total + envelope_lower_bound(&s, alpha, k);
    }
    Ok(total / T::of(n as f64))
}

/// `sqrt(||y||^2 + (mean^2 + var) (P - m))` over the observed values, with the
/// population variance. Unobserved entries are treated as draws from a
/// distribution with the observed mean and variance.
pub fn estimate_alpha<T: Real>(obs: &ObservationSet<T>) -> T {
    let y = obs.values();
    let m = T::of(y.len() as f64);
    let sq: T = y.iter().map(|&v| v * v).sum();
    let missing = obs.shape().len() - y.len();
    if missing == 0 {
        return sq.sqrt();
    }
    let mean = y.iter().copied().sum::<T>() / m;
    let var = y.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / m;
    (sq + (mean * mean + var) * T::of(missing as f64)).sqrt()
}

/// Root mean squared difference over the entries in `mask`.
pub fn rmse<T: Real>(pred: &DenseTensor<T>, truth: &DenseTensor<T>, mask: &ObservationSet<T>) -> Result<T> {
    if pred.shape() != truth.shape() || pred.shape() != mask.shape() {
        return Err(Error::invalid(format!(
            "shape mismatch: {} / {} / {}",
            pred.shape(),
            truth.shape(),
            mask.shape()
        )));
    }
    if mask.is_empty() {
        return Err(Error::invalid("empty mask"));
    }
    let (p, t) = (pred.as_slice(), truth.as_slice());
    let sum: T = mask.offsets().iter().map(|&k| (p[k] - t[k]) * (p[k] - t[k])).sum();
    Ok((sum / T::of(mask.len() as f64)).sqrt())
}

/// Synthetic low-multilinear-rank data.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerSpec {
    pub shape: Shape,
    pub core_ranks: Vec<usize>,
    pub noise_variance: f64,
    pub seed: u64,
}

impl TuckerSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = self.shape.dims();
        if self.core_ranks.len() != dims.len()
            || self.core_ranks.iter().zip(dims).any(|(&r, &p)| r == 0 || r > p)
        {
            return Err(Error::invalid(format!(
                "core ranks {:?} incompatible with shape {}",
                self.core_ranks, self.shape
            )));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::invalid("noise variance must be nonnegative"));
        }
        Ok(())
    }
}

/// Output of [`generate_tucker`].
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerSample<T> {
    /// Standardized tensor plus noise.
    pub ground_truth: DenseTensor<T>,
    /// Standardized tensor: zero mean, unit population standard deviation.
    pub noiseless: DenseTensor<T>,
}

fn gaussian<T: Real>(rng: &mut ChaCha8Rng) -> T {
    T::of(StandardNormal.sample(rng))
}

/// `T x_n M`: multiplies every mode-`mode` fiber by `m`.
pub fn mode_product<T: Real>(t: &DenseTensor<T>, m: &Matrix<T>, mode: usize) -> Result<DenseTensor<T>> {
    let unfolded = t.unfold(mode)?;
    let product = m.matmul(&unfolded.matrix)?;
    let mut dims = t.shape().dims().to_vec();
    dims[mode - 1] = m.rows();
    DenseTensor::fold(
        &Matricization {
            mode,
            matrix: product,
        },
        &Shape::new(dims)?,
    )
}

/// Core `C` and factors `M^(n)` drawn i.i.d. standard normal (core first, then
/// factors in mode order, column-major), contracted, before standardization.
pub fn tucker_raw<T: Real>(spec: &TuckerSpec) -> Result<DenseTensor<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    tucker_contract(spec, &mut rng)
}

fn tucker_contract<T: Real>(spec: &TuckerSpec, rng: &mut ChaCha8Rng) -> Result<DenseTensor<T>> {
    let core_shape = Shape::new(spec.core_ranks.clone())?;
    let core: Vec<T> = (0..core_shape.len()).map(|_| gaussian(rng)).collect();
    let mut t = DenseTensor::from_vec(core_shape, core)?;
    for (idx, (&p, &r)) in spec.shape.dims().iter().zip(&spec.core_ranks).enumerate() {
        let data = (0..p * r).map(|_| gaussian(rng)).collect();
        t = mode_product(&t, &Matrix::from_col_major(p, r, data), idx + 1)?;
    }
    Ok(t)
}

/// Standardized Tucker tensor plus i.i.d. Gaussian noise, deterministic in the
/// seed.
///
/// Subtracting the mean adds a rank-one term, so mode ranks of `noiseless`
/// may exceed `core_ranks` by one; [`tucker_raw`] has the exact ranks.
pub fn generate_tucker<T: Real>(spec: &TuckerSpec) -> Result<TuckerSample<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let raw = tucker_contract::<T>(spec, &mut rng)?;
    let len = T::of(raw.shape().len() as f64);
    let mean = raw.as_slice().iter().copied().sum::<T>() / len;
    let var = raw.as_slice().iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / len;
    let std = var.sqrt();
    if !(std > T::zero()) {
        return Err(Error::numeric("Tucker tensor has zero spread", 0));
    }
    let noiseless = raw.map(|x| (x - mean) / std);
    let ground_truth = if spec.noise_variance > 0.0 {
        let noise = Normal::new(0.0, spec.noise_variance.sqrt())
            .map_err(|e| Error::invalid(e.to_string()))?;
        let data = noiseless
            .as_slice()
            .iter()
            .map(|&x| x + T::of(noise.sample(&mut rng)))
            .collect();
        DenseTensor::from_vec(noiseless.shape().clone(), data)?
    } else {
        noiseless.clone()
    };
    Ok(TuckerSample {
        ground_truth,
        noiseless,
    })
}

/// A shape for the counterexample construction and the seed for its free
/// left singular vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleSpec {
    pub shape: Shape,
    pub seed: u64,
}

impl CounterexampleSpec {
    pub fn validate(&self) -> Result<()> {
        let s = &self.shape;
        if s.order() < 3 {
            return Err(Error::invalid(format!("need at least 3 modes, got {s}")));
        }
        if s.p_min() == s.p_max() {
            return Err(Error::invalid(format!("dimensions of {s} are all equal")));
        }
        if s.p_min() < 2 {
            return Err(Error::invalid(format!("every dimension of {s} must be at least 2")));
        }
        Ok(())
    }
}

/// Orthonormal basis of `R^n` from a Gaussian matrix by modified Gram-Schmidt.
fn random_orthonormal<T: Real>(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    loop {
        let mut cols: Vec<Vec<T>> = (0..n)
            .map(|_| (0..n).map(|_| gaussian(rng)).collect())
            .collect();
        let mut ok = true;
        for j in 0..n {
            for i in 0..j {
                let d: T = cols[i].iter().zip(&cols[j]).map(|(&a, &b)| a * b).sum();
                let (done, rest) = cols.split_at_mut(j);
                for (x, &q) in rest[0].iter_mut().zip(&done[i]) {
                    *x = *x - d * q;
                }
            }
            let norm = cols[j].iter().map(|&x| x * x).sum::<T>().sqrt();
            if !(norm > T::of(1e-6)) {
                ok = false;
                break;
            }
            cols[j].iter_mut().for_each(|x| *x = *x / norm);
        }
        if ok {
            return cols;
        }
    }
}

/// A tensor with `||W||_2 = sqrt(p_min)`, every matricization of spectral
/// norm at most one, and a larger rank in the longest mode than in the
/// shortest.
///
/// With modes sorted so that `p_1 <= ... <= p_N` and `q = p_1`, the mode-`N`
/// matricization is `sum_{k <= q+1} sigma u^k (v^k)^T` with
/// `sigma = sqrt(q / (q + 1))`, orthonormal `u^k` supported on the first
/// `q + 1` indices, `v^k = e_(k,...,k)` for `k <= q` and
/// `v^(q+1) = q^(-1/2) sum_i e_(i, s, ..., s)` with `s = (i mod q) + 1`.
/// Entries outside the leading `q x ... x q x (q+1)` block are zero.
pub fn build_counterexample<T: Real>(spec: &CounterexampleSpec) -> Result<DenseTensor<T>> {
    spec.validate()?;
    let dims = spec.shape.dims();
    let n = dims.len();
    let mut perm: Vec<usize> = (1..=n).collect();
    perm.sort_by_key(|&m| dims[m - 1]);
    let sorted = Shape::new(perm.iter().map(|&m| dims[m - 1]).collect::<Vec<_>>())?;
    let q = sorted.p_min();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let u = random_orthonormal::<T>(q + 1, &mut rng);
    let sigma = T::of((q as f64 / (q as f64 + 1.0)).sqrt());
    let tail = T::one() / T::of(q as f64).sqrt();

    let mut v: Vec<Vec<(Vec<usize>, T)>> = (1..=q).map(|k| vec![(vec![k; n - 1], T::one())]).collect();
    v.push(
        (1..=q)
            .map(|i| {
                let mut idx = vec![(i % q) + 1; n - 1];
                idx[0] = i;
                (idx, tail)
            })
            .collect(),
    );

    let mut w = DenseTensor::zeros(sorted);
    for (uk, vk) in u.iter().zip(&v) {
        for (idx, val) in vk {
            let mut full = idx.clone();
            full.push(0);
            for (i_n, &ui) in uk.iter().enumerate() {
                full[n - 1] = i_n + 1;
                let cur = w.get(&full)?;
                w.set(&full, cur + sigma * ui * *val)?;
            }
        }
    }

    let mut inverse = vec![0; n];
    for (k, &m) in perm.iter().enumerate() {
        inverse[m - 1] = k + 1;
    }
    w.permute_modes(&inverse)
}

/// Tolerances for [`Certificate::checks`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateTolerances {
    pub frobenius: f64,
    pub spectral: f64,
    pub trace: f64,
    pub rank: f64,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        CertificateTolerances {
            frobenius: 1e-10,
            spectral: 1e-8,
            trace: 1e-6,
            rank: RANK_TOL,
        }
    }
}

/// Measured and predicted properties of a counterexample tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub dims: Vec<usize>,
    pub frobenius_norm: f64,
    pub spectral_norms: Vec<f64>,
    pub ranks: Vec<usize>,
    pub trace_norm: f64,
    pub rank: Ratio<usize>,
    pub predicted_frobenius: f64,
    pub predicted_trace_norm: f64,
    pub predicted_rank: Ratio<usize>,
    pub tolerances: CertificateTolerances,
}

impl Certificate {
    /// Measures `w`, predicting values from its shape.
    pub fn measure<T: Real>(w: &DenseTensor<T>, tolerances: CertificateTolerances) -> Result<Self> {
        let shape = w.shape();
        let n = shape.order();
        let q = shape.p_min();
        let spectral_norms = (1..=n)
            .map(|mode| Ok(to_f64(spectral_norm(&w.unfold(mode)?.matrix)?)))
            .collect::<Result<Vec<_>>>()?;
        let ranks = mode_ranks(w, T::of(tolerances.rank))?;
        let rank = Ratio::new(ranks.iter().sum(), n);
        let qf = q as f64;
        Ok(Certificate {
            dims: shape.dims().to_vec(),
            frobenius_norm: to_f64(w.frobenius_norm()),
            spectral_norms,
            ranks,
            trace_norm: to_f64(tensor_trace_norm(w)?),
            rank,
            predicted_frobenius: qf.sqrt(),
            predicted_trace_norm: (qf * (n as f64 - 1.0) + (qf * qf + qf).sqrt()) / n as f64,
            predicted_rank: Ratio::new(q * (n - 1) + q + 1, n),
            tolerances,
        })
    }

    /// Named pass/fail results.
    pub fn checks(&self) -> Vec<(&'static str, bool)> {
        let tol = &self.tolerances;
        let first = self.ranks.first().copied().unwrap_or(0);
        let longest = self
            .dims
            .iter()
            .enumerate()
            .max_by_key(|&(i, &p)| (p, i))
            .map_or(0, |(i, _)| self.ranks[i]);
        let shortest = self
            .dims
            .iter()
            .enumerate()
            .min_by_key(|&(i, &p)| (p, i))
            .map_or(first, |(i, _)| self.ranks[i]);
        vec![
            (
                "frobenius norm equals sqrt(p_min)",
                (self.frobenius_norm - self.predicted_frobenius).abs() <= tol.frobenius,
            ),
            (
                "spectral norms at most one",
                self.spectral_norms.iter().all(|&s| s <= 1.0 + tol.spectral),
            ),
            ("longest mode has larger rank", longest > shortest),
            (
                "trace norm matches prediction",
                (self.trace_norm - self.predicted_trace_norm).abs() <= tol.trace,
            ),
            ("rank matches prediction", self.rank == self.predicted_rank),
            (
                "trace norm below rank",
                self.trace_norm < *self.rank.numer() as f64 / *self.rank.denom() as f64,
            ),
        ]
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|&(_, ok)| ok)
    }
}

/// Uniform random tensor rescaled to Frobenius norm `radius`.
pub fn random_on_sphere<T: Real, R: Rng + ?Sized>(shape: &Shape, radius: T, rng: &mut R) -> DenseTensor<T> {
    loop {
        let t = DenseTensor::from_fn(shape.clone(), |_| T::of(StandardNormal.sample(&mut *rng)));
        let norm = t.frobenius_norm();
        if norm > T::zero() {
            return t.scale(radius / norm);
        }
    }
}
