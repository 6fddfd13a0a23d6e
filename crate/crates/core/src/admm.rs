//! ADMM for entry-sampling tensor completion with a spectral penalty on every
//! matricization.
//!
//! The solver minimizes `||y - I(W)||^2 + gamma * sum_n psi(sigma(W_(n)))` by
//! splitting `W` into copies `B_1..B_N`, one per mode, with the augmented
//! Lagrangian
//!
//! ```text
//! L(W, B, A) = E(W) / gamma
//!            + sum_n [ psi(B_n(n)) - <A_n, W - B_n> + beta/2 ||W - B_n||^2 ]
//! ```
//!
//! Each outer iteration minimizes `L` in `W` (closed form, since `I^T I` is
//! diagonal), then in every `B_n` (a spectral prox), then takes the dual step
//! `A_n <- A_n - beta (W - B_n)`.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::gauge::{GaugeSpec, SubgradConfig};
use crate::scalar::Real;
use crate::spectral::{singular_values, spectral_prox};
use crate::tensor::{DenseTensor, Shape};

/// Observed entries `(multi-index, value)` of a tensor: the sampling operator
/// `I` together with the data `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet<T> {
    shape: Shape,
    offsets: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> ObservationSet<T> {
    /// Builds a set from 1-based multi-indices.
    pub fn new(shape: Shape, entries: Vec<(Vec<usize>, T)>) -> Result<Self> {
        let entries = entries
            .into_iter()
            .map(|(idx, v)| Ok((shape.linear_index(&idx)?, v)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_offsets(shape, entries)
    }

    /// Builds a set from flat offsets (first mode fastest).
    pub fn from_offsets(shape: Shape, entries: Vec<(usize, T)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("observation set is empty"));
        }
        let total = shape.len();
        let mut seen = HashSet::with_capacity(entries.len());
        let mut offsets = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (k, v) in entries {
            if k >= total {
                return Err(Error::invalid(format!("offset {k} outside shape {shape}")));
            }
            if !seen.insert(k) {
                return Err(Error::invalid(format!(
                    "duplicate observation at {:?}",
                    shape.multi_index(k)
                )));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite observation at {:?}",
                    shape.multi_index(k)
                )));
            }
            offsets.push(k);
            values.push(v);
        }
        Ok(ObservationSet {
            shape,
            offsets,
            values,
        })
    }

    /// Samples `tensor` at the given flat offsets.
    pub fn sample(tensor: &DenseTensor<T>, offsets: &[usize]) -> Result<Self> {
        let data = tensor.as_slice();
        let entries = offsets
            .iter()
            .map(|&k| {
                data.get(k)
                    .map(|&v| (k, v))
                    .ok_or_else(|| Error::invalid(format!("offset {k} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_offsets(tensor.shape().clone(), entries)
    }

    /// Every entry of `tensor`.
    pub fn full(tensor: &DenseTensor<T>) -> Self {
        let offsets: Vec<usize> = (0..tensor.shape().len()).collect();
        Self::sample(tensor, &offsets).expect("every offset is valid")
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Number of observations `m`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Observed values `y`, in insertion order.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `(1-based multi-index, value)` pairs in insertion order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, T)> + '_ {
        self.offsets
            .iter()
            .zip(&self.values)
            .map(|(&k, &v)| (self.shape.multi_index(k), v))
    }
}

/// `I(W)`: the entries of `w` at the observed positions, in observation order.
pub fn apply_sampling<T: Real>(w: &DenseTensor<T>, obs: &ObservationSet<T>) -> Result<Vec<T>> {
    check_shape(w.shape(), obs.shape())?;
    let data = w.as_slice();
    Ok(obs.offsets.iter().map(|&k| data[k]).collect())
}

/// `I^*(v)`: scatters `values` back into a zero tensor.
pub fn adjoint_sampling<T: Real>(values: &[T], obs: &ObservationSet<T>) -> Result<DenseTensor<T>> {
    if values.len() != obs.len() {
        return Err(Error::invalid(format!(
            "{} values for {} observations",
            values.len(),
            obs.len()
        )));
    }
    let mut out = DenseTensor::zeros(obs.shape.clone());
    let data = out.as_mut_slice();
    for (&k, &v) in obs.offsets.iter().zip(values) {
        data[k] = v;
    }
    Ok(out)
}

/// `||y - I(W)||^2`.
pub fn data_fit<T: Real>(w: &DenseTensor<T>, obs: &ObservationSet<T>) -> Result<T> {
    Ok(apply_sampling(w, obs)?
        .iter()
        .zip(obs.values())
        .map(|(&p, &y)| (p - y) * (p - y))
        .sum())
}

fn check_shape(a: &Shape, b: &Shape) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("shape mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig<T> {
    /// Regularization weight.
    pub gamma: T,
    /// Augmented-Lagrangian penalty, held fixed.
    pub beta: T,
    pub max_outer_iters: usize,
    /// Stop when `max_n ||W - B_n|| / max(1, ||W||)` falls to this value.
    pub primal_tol: T,
    pub subgrad: SubgradConfig<T>,
    pub gauge: GaugeSpec<T>,
}

impl<T: Real> AdmmConfig<T> {
    pub fn new(gauge: GaugeSpec<T>, gamma: T) -> Self {
        AdmmConfig {
            gamma,
            beta: T::one(),
            max_outer_iters: 500,
            primal_tol: T::of(1e-5),
            subgrad: SubgradConfig::default(),
            gauge,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !positive(self.gamma) || !positive(self.beta) {
            return Err(Error::invalid(format!(
                "gamma ({}) and beta ({}) must be positive",
                self.gamma, self.beta
            )));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::invalid("max_outer_iters must be positive"));
        }
        if !(self.primal_tol >= T::zero()) {
            return Err(Error::invalid("primal_tol must be nonnegative"));
        }
        self.subgrad.validate()?;
        self.gauge.validate()
    }
}

/// Iterates of the splitting scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState<T> {
    pub w: DenseTensor<T>,
    /// One copy of `W` per mode.
    pub b: Vec<DenseTensor<T>>,
    /// Multipliers, one per mode.
    pub a: Vec<DenseTensor<T>>,
    pub iter: usize,
    pub primal_residual: T,
}

impl<T: Real> AdmmState<T> {
    pub fn zeros(shape: &Shape) -> Self {
        let zero = DenseTensor::zeros(shape.clone());
        let n = shape.order();
        AdmmState {
            w: zero.clone(),
            b: vec![zero.clone(); n],
            a: vec![zero; n],
            iter: 0,
            primal_residual: T::zero(),
        }
    }

    /// `max_n ||W - B_n|| / max(1, ||W||)`.
    pub fn relative_primal_residual(&self) -> T {
        let scale = self.w.frobenius_norm().max(T::one());
        self.b
            .iter()
            .map(|b| self.w.distance(b).expect("consistent shapes"))
            .fold(T::zero(), T::max)
            / scale
    }
}

/// Part of the augmented Lagrangian that depends on `W` (the `psi(B_n)` terms
/// are dropped).
pub fn lagrangian_w_terms<T: Real>(
    w: &DenseTensor<T>,
    state: &AdmmState<T>,
    obs: &ObservationSet<T>,
    cfg: &AdmmConfig<T>,
) -> Result<T> {
    let mut total = data_fit(w, obs)? / cfg.gamma;
    let half_beta = cfg.beta * T::of(0.5);
    for (b, a) in state.b.iter().zip(&state.a) {
        let diff = w.sub(b)?;
        total = total - a.inner(&diff)? + half_beta * diff.inner(&diff)?;
    }
    Ok(total)
}

/// Minimizer of the augmented Lagrangian in `W`.
///
/// With `s = sum_n (beta B_n + A_n)`, an observed entry becomes
/// `(s + 2 y / gamma) / (N beta + 2 / gamma)` and an unobserved one `s / (N beta)`.
pub fn update_w<T: Real>(
    state: &AdmmState<T>,
    obs: &ObservationSet<T>,
    cfg: &AdmmConfig<T>,
) -> Result<DenseTensor<T>> {
    let shape = state.w.shape();
    check_shape(shape, obs.shape())?;
    let n = T::of(state.b.len() as f64);
    let mut s = vec![T::zero(); shape.len()];
    for (b, a) in state.b.iter().zip(&state.a) {
        for ((acc, &bv), &av) in s.iter_mut().zip(b.as_slice()).zip(a.as_slice()) {
            *acc = *acc + cfg.beta * bv + av;
        }
    }
    let free = n * cfg.beta;
    let data_weight = T::of(2.0) / cfg.gamma;
    let observed = free + data_weight;
    let mut out: Vec<T> = s.iter().map(|&x| x / free).collect();
    for (&k, &y) in obs.offsets().iter().zip(obs.values()) {
        out[k] = (s[k] + data_weight * y) / observed;
    }
    DenseTensor::from_vec(shape.clone(), out)
}

/// Per-mode copies and the penalty value of each (`sum psi_l1` of its
/// spectrum for the trace gauge, zero otherwise).
fn update_b_with_penalty<T: Real>(
    state: &AdmmState<T>,
    cfg: &AdmmConfig<T>,
) -> Result<(Vec<DenseTensor<T>>, T)> {
    let shape = state.w.shape();
    let inv_beta = T::one() / cfg.beta;
    let mut penalty = T::zero();
    let mut out = Vec::with_capacity(state.a.len());
    for (idx, a) in state.a.iter().enumerate() {
        let mode = idx + 1;
        let x = state.w.lin_comb(T::one(), a, -inv_beta)?;
        let mut unfolded = x.unfold(mode)?;
        let mut mode_penalty = T::zero();
        unfolded.matrix = spectral_prox(&unfolded.matrix, |sigma: &[T]| {
            let v = cfg.gauge.prox(sigma, cfg.beta, &cfg.subgrad);
            mode_penalty = v.iter().map(|x| x.abs()).sum();
            Ok(v)
        })
        .map_err(|e| match e {
            Error::NumericFailure { context, iterations } => Error::NumericFailure {
                context: format!("mode-{mode} update: {context}"),
                iterations,
            },
            other => other,
        })?;
        if matches!(cfg.gauge, GaugeSpec::L1) {
            penalty = penalty + mode_penalty;
        }
        out.push(DenseTensor::fold(&unfolded, shape)?);
    }
    Ok((out, penalty))
}

/// `B_n = fold(prox_{psi/beta}(unfold_n(W - A_n / beta)))` for every mode.
pub fn update_b<T: Real>(state: &AdmmState<T>, cfg: &AdmmConfig<T>) -> Result<Vec<DenseTensor<T>>> {
    Ok(update_b_with_penalty(state, cfg)?.0)
}

/// `A_n - beta (W - B_n)` for every mode.
pub fn update_a<T: Real>(state: &AdmmState<T>, cfg: &AdmmConfig<T>) -> Result<Vec<DenseTensor<T>>> {
    state
        .a
        .iter()
        .zip(&state.b)
        .map(|(a, b)| {
            let d = state.w.sub(b)?;
            a.lin_comb(T::one(), &d, -cfg.beta)
        })
        .collect()
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<T> {
    /// 1-based iteration number.
    pub iter: usize,
    pub primal_residual: T,
    /// `beta * sqrt(sum_n ||B_n - B_n_prev||^2)`.
    pub dual_residual: T,
    /// `||y - I(W)||^2`, plus `gamma * sum_n ||B_n(n)||_tr` for the trace gauge.
    pub objective: T,
    pub elapsed_ms: f64,
}

/// Summary of a [`solve`] call.
#[derive(Debug, Clone)]
pub struct SolverReport<T> {
    pub gauge: GaugeSpec<T>,
    pub gamma: T,
    pub beta: T,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterationRecord<T>>,
    pub elapsed: Duration,
    /// Data fit at the returned tensor, plus the exact trace-norm penalty
    /// `gamma * sum_n ||W_(n)||_tr` for the trace gauge.
    pub final_objective: T,
}

/// Runs one outer iteration in place and returns its record (with zero elapsed time).
pub fn step<T: Real>(
    state: &mut AdmmState<T>,
    obs: &ObservationSet<T>,
    cfg: &AdmmConfig<T>,
) -> Result<IterationRecord<T>> {
    let iter = state.iter + 1;
    state.w = update_w(state, obs, cfg)?;
    if !state.w.is_finite() {
        return Err(Error::numeric("W update produced non-finite values", iter));
    }
    let (b, penalty) = update_b_with_penalty(state, cfg).map_err(|e| match e {
        Error::InvalidArgument(msg) if msg.contains("non-finite") => {
            Error::numeric(format!("B update: {msg}"), iter)
        }
        Error::NumericFailure { context, .. } => Error::numeric(context, iter),
        other => other,
    })?;
    let mut dual_sq = T::zero();
    for (new, old) in b.iter().zip(&state.b) {
        let d = new.distance(old)?;
        dual_sq = dual_sq + d * d;
    }
    state.b = b;
    state.a = update_a(state, cfg)?;
    state.iter = iter;
    state.primal_residual = state.relative_primal_residual();
    if !state.primal_residual.is_finite() {
        return Err(Error::numeric("non-finite primal residual", iter));
    }
    Ok(IterationRecord {
        iter,
        primal_residual: state.primal_residual,
        dual_residual: cfg.beta * dual_sq.sqrt(),
        objective: data_fit(&state.w, obs)? + cfg.gamma * penalty,
        elapsed_ms: 0.0,
    })
}

/// `||y - I(W)||^2 + gamma * sum_n ||W_(n)||_tr`.
pub fn trace_objective<T: Real>(w: &DenseTensor<T>, obs: &ObservationSet<T>, gamma: T) -> Result<T> {
    let mut penalty = T::zero();
    for mode in 1..=w.shape().order() {
        penalty = penalty + singular_values(&w.unfold(mode)?.matrix)?.into_iter().sum::<T>();
    }
    Ok(data_fit(w, obs)? + gamma * penalty)
}

/// Runs ADMM from the zero state until the relative primal residual reaches
/// `primal_tol` or the iteration cap is hit.
pub fn solve<T: Real>(obs: &ObservationSet<T>, cfg: &AdmmConfig<T>) -> Result<(DenseTensor<T>, SolverReport<T>)> {
    solve_with(obs, cfg, |_| {})
}

/// [`solve`], handing each iteration record to `on_iter` as soon as it is
/// produced, so callers keep the history even if a later iteration fails.
pub fn solve_with<T: Real>(
    obs: &ObservationSet<T>,
    cfg: &AdmmConfig<T>,
    mut on_iter: impl FnMut(&IterationRecord<T>),
) -> Result<(DenseTensor<T>, SolverReport<T>)> {
    cfg.validate()?;
    if obs.shape().dims().iter().any(|&p| p < 2) {
        return Err(Error::invalid(format!(
            "every mode needs at least two indices, got {}",
            obs.shape()
        )));
    }
    let start = Instant::now();
    let mut state = AdmmState::zeros(obs.shape());
    let mut history = Vec::new();
    let mut converged = false;
    while state.iter < cfg.max_outer_iters {
        let mut rec = step(&mut state, obs, cfg)?;
        rec.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        on_iter(&rec);
        history.push(rec);
        if state.primal_residual <= cfg.primal_tol {
            converged = true;
            break;
        }
    }
    let final_objective = match cfg.gauge {
        GaugeSpec::L1 => trace_objective(&state.w, obs, cfg.gamma)?,
        GaugeSpec::CardEnvelope { .. } => data_fit(&state.w, obs)?,
    };
    let report = SolverReport {
        gauge: cfg.gauge,
        gamma: cfg.gamma,
        beta: cfg.beta,
        iterations: state.iter,
        converged,
        history,
        elapsed: start.elapsed(),
        final_objective,
    };
    Ok((state.w, report))
}
