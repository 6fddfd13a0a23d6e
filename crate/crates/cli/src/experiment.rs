//! In-memory experiment logic shared by the commands and the tests.

use std::collections::HashSet;
use std::time::Instant;

use tcomp_core::models::TuckerSample;
use tcomp_core::{generate_tucker, rmse, Gauge, Observations, Shape, Tensor, TuckerSpec};

use crate::config::{ExperimentConfig, GaugeKind};
use crate::error::{CliError, CliResult};
use crate::split::SplitAssignment;

/// One grid point of a validation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub val_rmse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub gauge: Gauge,
    pub rows: Vec<SweepRow>,
    /// Index of the winning row.
    pub best: usize,
    /// Model fitted at the winning `gamma`; it is not refitted.
    pub model: Tensor,
}

impl SweepOutcome {
    pub fn best_row(&self) -> &SweepRow {
        &self.rows[self.best]
    }
}

fn check_disjoint(a: &Observations, b: &Observations) -> CliResult<()> {
    if a.shape() != b.shape() {
        return Err(CliError::usage(format!("shape mismatch: {} vs {}", a.shape(), b.shape())));
    }
    let seen: HashSet<usize> = a.offsets().iter().copied().collect();
    if b.offsets().iter().any(|k| seen.contains(k)) {
        return Err(CliError::usage("training and validation entries overlap"));
    }
    Ok(())
}

/// Fits `kind` on `train` for every `gamma` of the grid and keeps the one with
/// the lowest validation RMSE, preferring the smaller `gamma` on ties.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    kind: GaugeKind,
    train: &Observations,
    validation: &Observations,
) -> CliResult<SweepOutcome> {
    check_disjoint(train, validation)?;
    let gauge = cfg.gauge_for(kind, train)?;
    let truth_of_val = validation_tensor(validation);
    let mut rows = Vec::with_capacity(cfg.gamma_grid.len());
    let mut best: Option<(usize, Tensor)> = None;
    for &gamma in &cfg.gamma_grid {
        let start = Instant::now();
        let (w, report) = tcomp_core::solve(train, &cfg.solver(gauge, gamma))?;
        let row = SweepRow {
            gamma,
            val_rmse: rmse(&w, &truth_of_val, validation)?,
            iterations: report.iterations,
            converged: report.converged,
            seconds: start.elapsed().as_secs_f64(),
        };
        let better = match &best {
            None => true,
            Some((i, _)) => {
                let b: &SweepRow = &rows[*i];
                row.val_rmse < b.val_rmse || (row.val_rmse == b.val_rmse && row.gamma < b.gamma)
            }
        };
        rows.push(row);
        if better {
            best = Some((rows.len() - 1, w));
        }
    }
    let (best, model) = best.expect("non-empty grid");
    Ok(SweepOutcome { gauge, rows, best, model })
}

/// Dense tensor holding the observed values (zeros elsewhere), for RMSE.
pub fn validation_tensor(obs: &Observations) -> Tensor {
    let mut t = Tensor::zeros(obs.shape().clone());
    for (&k, &v) in obs.offsets().iter().zip(obs.values()) {
        t.as_mut_slice()[k] = v;
    }
    t
}

/// RMSE of `model` against the values stored in `obs`.
pub fn observed_rmse(model: &Tensor, obs: &Observations) -> CliResult<f64> {
    Ok(rmse(model, &validation_tensor(obs), obs)?)
}

/// A synthetic Tucker tensor with its observation splits.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub sample: TuckerSample<f64>,
    pub split: SplitAssignment,
    pub train: Observations,
    pub validation: Observations,
    pub test: Observations,
}

pub fn synthetic_instance(cfg: &ExperimentConfig, shape: &[usize], seed: u64) -> CliResult<SyntheticInstance> {
    let shape = Shape::new(shape.to_vec())?;
    let ranks: Vec<usize> = cfg.ranks.iter().zip(shape.dims()).map(|(&r, &p)| r.min(p)).collect();
    let spec = TuckerSpec {
        shape: shape.clone(),
        core_ranks: ranks,
        noise_variance: cfg.noise_var,
        seed,
    };
    let sample = generate_tucker::<f64>(&spec)?;
    let split = SplitAssignment::new(shape.len(), cfg.split, seed)?;
    let t = &sample.ground_truth;
    Ok(SyntheticInstance {
        train: Observations::sample(t, &split.train)?,
        validation: Observations::sample(t, &split.validation)?,
        test: Observations::sample(t, &split.test)?,
        sample,
        split,
    })
}

/// Validation-selected result of one gauge on one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeResult {
    pub gamma: f64,
    pub val_rmse: f64,
    pub test_rmse: f64,
    /// Envelope radius, when the gauge has one.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    pub trace: GaugeResult,
    pub envelope: GaugeResult,
}

/// Sweeps both gauges on the synthetic instance for `seed` and scores the
/// winners on the test split, which the sweeps never see.
pub fn compare_gauges(cfg: &ExperimentConfig, seed: u64) -> CliResult<TrialOutcome> {
    let inst = synthetic_instance(cfg, &cfg.shape, seed)?;
    let result = |kind| -> CliResult<GaugeResult> {
        let s = run_sweep(cfg, kind, &inst.train, &inst.validation)?;
        Ok(GaugeResult {
            gamma: s.best_row().gamma,
            val_rmse: s.best_row().val_rmse,
            test_rmse: observed_rmse(&s.model, &inst.test)?,
            alpha: match s.gauge {
                Gauge::L1 => None,
                Gauge::CardEnvelope { alpha } => Some(alpha),
            },
        })
    };
    Ok(TrialOutcome {
        seed,
        trace: result(GaugeKind::Trace)?,
        envelope: result(GaugeKind::Envelope)?,
    })
}

/// Wall time of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub p: usize,
    pub gauge: GaugeKind,
    pub seed: u64,
    pub seconds: f64,
    pub iterations: usize,
}

/// Times both gauges at `cfg.gamma` on `p x p x p` instances, for every size
/// and `cfg.repetitions` seeds starting at `cfg.seed`.
pub fn bench(cfg: &ExperimentConfig) -> CliResult<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &p in &cfg.sizes {
        for rep in 0..cfg.repetitions as u64 {
            let seed = cfg.seed + rep;
            let inst = synthetic_instance(cfg, &[p, p, p], seed)?;
            for kind in [GaugeKind::Trace, GaugeKind::Envelope] {
                let start = Instant::now();
                let gauge = cfg.gauge_for(kind, &inst.train)?;
                let (_, report) = tcomp_core::solve(&inst.train, &cfg.solver(gauge, cfg.gamma))?;
                rows.push(BenchRow {
                    p,
                    gauge: kind,
                    seed,
                    seconds: start.elapsed().as_secs_f64(),
                    iterations: report.iterations,
                });
            }
        }
    }
    Ok(rows)
}

/// Median envelope-to-trace time ratio per size, in the order of `cfg.sizes`.
pub fn time_ratios(rows: &[BenchRow], sizes: &[usize]) -> Vec<(usize, f64)> {
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    };
    sizes
        .iter()
        .map(|&p| {
            let times = |k| rows.iter().filter(|r| r.p == p && r.gauge == k).map(|r| r.seconds).collect::<Vec<_>>();
            (p, median(times(GaugeKind::Envelope)) / median(times(GaugeKind::Trace)))
        })
        .collect()
}
