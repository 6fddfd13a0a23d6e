//! Gauge functions on singular-value vectors and their proximity operators.
//!
//! Two gauges drive the spectral penalty: the `l1` norm (tensor trace norm)
//! and `omega_alpha`, the convex envelope of the cardinality on the Euclidean
//! ball of radius `alpha`. The envelope has no usable closed form, but its
//! conjugate does:
//!
//! ```text
//! omega*_alpha(s) = max_{r = 0..d} ( alpha * ||s_down[..r]||_2 - r )
//! ```
//!
//! where `s_down` is `s` sorted by decreasing magnitude. The prox of
//! `omega_alpha / beta` is obtained from the prox of `beta * omega*_alpha`
//! through the Moreau identity and the scaling rule for conjugates, and the
//! latter is computed by a projected subgradient method over the monotone
//! cone.

use crate::cone::{approx_project, in_cone, ConeVector};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which gauge drives the spectral penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaugeSpec<T> {
    /// `l1` norm of the spectrum: trace-norm regularization.
    L1,
    /// Cardinality envelope on the ball of radius `alpha`.
    CardEnvelope { alpha: T },
}

impl<T: Real> GaugeSpec<T> {
    pub fn card_envelope(alpha: T) -> Result<Self> {
        let g = GaugeSpec::CardEnvelope { alpha };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GaugeSpec::L1 => Ok(()),
            GaugeSpec::CardEnvelope { alpha } if alpha > T::zero() && alpha.is_finite() => Ok(()),
            GaugeSpec::CardEnvelope { alpha } => {
                Err(Error::invalid(format!("envelope radius must be positive, got {alpha}")))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GaugeSpec::L1 => "trace",
            GaugeSpec::CardEnvelope { .. } => "envelope",
        }
    }

    /// `prox_{psi / beta}` of a non-increasing nonnegative spectrum.
    pub fn prox(&self, spectrum: &[T], beta: T, cfg: &SubgradConfig<T>) -> Vec<T> {
        match *self {
            GaugeSpec::L1 => soft_threshold(spectrum, T::one() / beta),
            GaugeSpec::CardEnvelope { alpha } => prox_envelope(spectrum, alpha, beta, cfg),
        }
    }
}

/// Settings of the projected subgradient loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradConfig<T> {
    /// Step seed; step `t` uses `tau0 / sqrt(t)`.
    pub tau0: T,
    /// Stop once the best point has not improved for this many steps.
    pub stall_limit: usize,
    /// Hard cap on the number of steps.
    pub max_iters: usize,
}

impl<T: Real> Default for SubgradConfig<T> {
    fn default() -> Self {
        SubgradConfig {
            tau0: T::of(0.5),
            stall_limit: 1000,
            max_iters: 50_000,
        }
    }
}

impl<T: Real> SubgradConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > T::zero()) || self.stall_limit == 0 || self.stall_limit > self.max_iters {
            return Err(Error::invalid(format!(
                "bad subgradient config: tau0 {}, stall_limit {}, max_iters {}",
                self.tau0, self.stall_limit, self.max_iters
            )));
        }
        Ok(())
    }
}

/// Returns `(max value, smallest maximiser)` of `alpha * ||w[..r]|| - r`
/// over `r = 0..=d`, scanning `w` in the given order.
fn prefix_max<T: Real>(w: impl Iterator<Item = T>, alpha: T) -> (T, usize) {
    let mut best = (T::zero(), 0);
    let mut sq = T::zero();
    for (r, x) in w.enumerate() {
        sq = sq + x * x;
        let val = alpha * sq.sqrt() - T::of((r + 1) as f64);
        if val > best.0 {
            best = (val, r + 1);
        }
    }
    best
}

/// Conjugate of the cardinality restricted to the ball of radius `alpha`.
pub fn omega_star<T: Real>(s: &[T], alpha: T) -> T {
    let mut mags: Vec<T> = s.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    prefix_max(mags.into_iter(), alpha).0
}

/// Smallest `k` maximizing `alpha * ||w[..k]|| - k` for `w` in the cone.
pub fn argmax_k<T: Real>(w: &[T], alpha: T) -> usize {
    prefix_max(w.iter().copied(), alpha).1
}

/// `h(w) = 0.5 ||w - y||^2 + beta * max_r (alpha ||w[..r]|| - r)`, the
/// objective whose minimizer over the cone is `prox_{beta omega*}(y)`.
pub fn conjugate_objective<T: Real>(w: &[T], y: &[T], alpha: T, beta: T) -> T {
    let fit: T = w.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
    T::of(0.5) * fit + beta * prefix_max(w.iter().copied(), alpha).0
}

fn subgradient_into<T: Real>(w: &[T], y: &[T], alpha: T, beta: T, g: &mut [T]) {
    let mut k = argmax_k(w, alpha);
    let head = w[..k].iter().map(|&x| x * x).sum::<T>().sqrt();
    if k > 0 && head == T::zero() {
        k = 0;
    }
    let gain = if k > 0 { T::one() + alpha * beta / head } else { T::one() };
    for i in 0..w.len() {
        g[i] = if i < k { gain * w[i] - y[i] } else { w[i] - y[i] };
    }
}

/// A subgradient of [`conjugate_objective`] at `w`.
pub fn subgradient_h<T: Real>(w: &[T], y: &[T], alpha: T, beta: T) -> Vec<T> {
    let mut g = vec![T::zero(); w.len()];
    subgradient_into(w, y, alpha, beta, &mut g);
    g
}

/// Result of the projected subgradient loop.
#[derive(Debug, Clone)]
pub struct ConjugateProx<T> {
    pub point: ConeVector<T>,
    /// `h` at `point`.
    pub objective: T,
    pub iterations: usize,
}

/// `prox_{beta omega*_alpha}(y)` for `y` in the cone, by projected subgradient
/// descent with steps `tau0 / sqrt(t)`, keeping the best iterate.
pub fn prox_conjugate<T: Real>(y: &[T], alpha: T, beta: T, cfg: &SubgradConfig<T>) -> ConjugateProx<T> {
    let d = y.len();
    let mut w = approx_project(y).into_vec();
    let mut best = w.clone();
    let mut best_h = conjugate_objective(&w, y, alpha, beta);
    let mut g = vec![T::zero(); d];
    let mut stalled = 0;
    let mut t = 0;
    while t < cfg.max_iters && stalled < cfg.stall_limit {
        t += 1;
        let tau = cfg.tau0 / T::of(t as f64).sqrt();
        subgradient_into(&w, y, alpha, beta, &mut g);
        for (wi, &gi) in w.iter_mut().zip(&g) {
            *wi = *wi - tau * gi;
        }
        w = approx_project(&w).into_vec();
        let h = conjugate_objective(&w, y, alpha, beta);
        if h < best_h {
            best_h = h;
            best.copy_from_slice(&w);
            stalled = 0;
        } else {
            stalled += 1;
        }
    }
    debug_assert!(in_cone(&best));
    ConjugateProx {
        point: ConeVector::new(best).expect("iterates stay in the cone"),
        objective: best_h,
        iterations: t,
    }
}

/// `prox_{omega**_alpha / beta}(x)` for a non-increasing nonnegative `x`,
/// via `x - prox_{beta omega*}(beta x) / beta`.
pub fn prox_envelope<T: Real>(x: &[T], alpha: T, beta: T, cfg: &SubgradConfig<T>) -> Vec<T> {
    let scaled: Vec<T> = x.iter().map(|&v| beta * v).collect();
    let inner = prox_conjugate(&scaled, alpha, beta, cfg);
    x.iter()
        .zip(inner.point.as_slice())
        .map(|(&xi, &wi)| xi - wi / beta)
        .collect()
}

/// `max(sigma_i - threshold, 0)`, the prox of `threshold * ||.||_1` on
/// nonnegative vectors.
pub fn soft_threshold<T: Real>(sigma: &[T], threshold: T) -> Vec<T> {
    sigma.iter().map(|&s| (s - threshold).max(T::zero())).collect()
}

/// Certified lower bound `k ||x||^2 - omega*_alpha(k x)` on `omega**_alpha(x)`.
pub fn envelope_lower_bound<T: Real>(x: &[T], alpha: T, k: T) -> T {
    let scaled: Vec<T> = x.iter().map(|&v| k * v).collect();
    let sq: T = x.iter().map(|&v| v * v).sum();
    k * sq - omega_star(&scaled, alpha)
}

/// Number of nonzero entries.
pub fn cardinality<T: Real>(x: &[T]) -> usize {
    x.iter().filter(|&&v| v != T::zero()).count()
}
