//! The subcommands: each reads its inputs, writes files under `out_dir` and
//! prints a short summary to `out`.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use tcomp_core::io::{load_observations, load_tensor, save_observations, save_tensor};
use tcomp_core::models::{Certificate, CertificateTolerances};
use tcomp_core::{build_counterexample, solve_with, CounterexampleSpec, Gauge, Shape, Tensor};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiment::{bench, observed_rmse, run_sweep, synthetic_instance, time_ratios};

fn out_path(cfg: &ExperimentConfig, name: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out_dir.display())))?;
    Ok(cfg.out_dir.join(name))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn alpha_of(g: &Gauge) -> String {
    match g {
        Gauge::L1 => String::new(),
        Gauge::CardEnvelope { alpha } => alpha.to_string(),
    }
}

/// Writes the Tucker tensor, its noiseless version and the three splits.
pub fn gen_synthetic(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<()> {
    cfg.validate()?;
    let inst = synthetic_instance(cfg, &cfg.shape, cfg.seed)?;
    save_tensor(&inst.sample.ground_truth, &out_path(cfg, "ground_truth.txt")?)?;
    save_tensor(&inst.sample.noiseless, &out_path(cfg, "noiseless.txt")?)?;
    for (name, obs) in [("train.obs", &inst.train), ("validation.obs", &inst.validation), ("test.obs", &inst.test)] {
        save_observations(obs, &out_path(cfg, name)?)?;
        writeln!(out, "{name}: {} entries", obs.len())?;
    }
    writeln!(out, "shape {}", inst.sample.ground_truth.shape())?;
    Ok(())
}

/// Builds the counterexample tensor and prints its certificate; fails with
/// the certificate exit code if any certified property does not hold.
pub fn make_counterexample(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<()> {
    let spec = CounterexampleSpec {
        shape: Shape::new(cfg.shape.clone())?,
        seed: cfg.seed,
    };
    let w: Tensor = build_counterexample(&spec)?;
    save_tensor(&w, &out_path(cfg, "counterexample.txt")?)?;
    let cert = Certificate::measure(&w, CertificateTolerances::default())?;
    writeln!(out, "shape {}", spec.shape)?;
    writeln!(out, "frobenius norm {} (predicted {})", cert.frobenius_norm, cert.predicted_frobenius)?;
    writeln!(out, "spectral norms {:?}", cert.spectral_norms)?;
    writeln!(out, "mode ranks {:?}", cert.ranks)?;
    writeln!(out, "trace norm {} (predicted {})", cert.trace_norm, cert.predicted_trace_norm)?;
    let r = cert.rank;
    writeln!(
        out,
        "rank {}/{} = {} (predicted {}/{})",
        r.numer(),
        r.denom(),
        *r.numer() as f64 / *r.denom() as f64,
        cert.predicted_rank.numer(),
        cert.predicted_rank.denom()
    )?;
    let mut failed = Vec::new();
    for (name, ok) in cert.checks() {
        writeln!(out, "{} {name}", if ok { "ok  " } else { "FAIL" })?;
        if !ok {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Certificate(failed.join(", ")))
    }
}

/// Solves on the training observations with `cfg.gauge` and `cfg.gamma`.
/// The per-iteration report is written as the solver runs, so it survives a
/// numeric failure.
pub fn complete(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<()> {
    cfg.validate()?;
    let train = load_observations::<f64>(&ExperimentConfig::require(&cfg.train, "train")?)?;
    let gauge = cfg.gauge_for(cfg.gauge, &train)?;
    let mut report_csv = csv_writer(&out_path(cfg, "report.csv")?)?;
    report_csv.write_record(["iteration", "primal_residual", "dual_residual", "objective", "elapsed_ms"])?;
    let mut write_err = None;
    let result = solve_with(&train, &cfg.solver(gauge, cfg.gamma), |r| {
        let row = [
            r.iter.to_string(),
            r.primal_residual.to_string(),
            r.dual_residual.to_string(),
            r.objective.to_string(),
            r.elapsed_ms.to_string(),
        ];
        if let Err(e) = report_csv.write_record(&row) {
            write_err.get_or_insert(e);
        }
    });
    report_csv.flush()?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    let (w, report) = result?;
    save_tensor(&w, &out_path(cfg, "completed.txt")?)?;
    let mut summary = csv_writer(&out_path(cfg, "summary.csv")?)?;
    summary.write_record(["gauge", "alpha", "gamma", "beta", "iterations", "converged", "final_objective"])?;
    summary.write_record([
        cfg.gauge.to_string(),
        alpha_of(&gauge),
        cfg.gamma.to_string(),
        cfg.beta.to_string(),
        report.iterations.to_string(),
        report.converged.to_string(),
        report.final_objective.to_string(),
    ])?;
    summary.flush()?;
    writeln!(
        out,
        "{} gauge{}: {} iterations, converged {}, objective {}",
        cfg.gauge,
        match gauge {
            Gauge::CardEnvelope { alpha } => format!(" (alpha {alpha})"),
            Gauge::L1 => String::new(),
        },
        report.iterations,
        report.converged,
        report.final_objective
    )?;
    Ok(())
}

/// Validation sweep over `cfg.gamma_grid`; writes `sweep.csv` and the winning model.
pub fn sweep(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<()> {
    cfg.validate()?;
    let train = load_observations::<f64>(&ExperimentConfig::require(&cfg.train, "train")?)?;
    let validation = load_observations::<f64>(&ExperimentConfig::require(&cfg.validation, "validation")?)?;
    let s = run_sweep(cfg, cfg.gauge, &train, &validation)?;
    let mut w = csv_writer(&out_path(cfg, "sweep.csv")?)?;
    w.write_record(["gamma", "val_rmse", "iterations", "converged", "seconds"])?;
    for r in &s.rows {
        w.write_record([
            r.gamma.to_string(),
            r.val_rmse.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
            r.seconds.to_string(),
        ])?;
    }
    w.flush()?;
    save_tensor(&s.model, &out_path(cfg, "model.txt")?)?;
    let b = s.best_row();
    writeln!(out, "{} gauge: best gamma {} with validation rmse {}", cfg.gauge, b.gamma, b.val_rmse)?;
    if let Gauge::CardEnvelope { alpha } = s.gauge {
        writeln!(out, "alpha {alpha}")?;
    }
    Ok(())
}

/// Prints the test RMSE of a model and appends it to `eval.csv`.
pub fn eval(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<()> {
    let model_path = ExperimentConfig::require(&cfg.model, "model")?;
    let test_path = ExperimentConfig::require(&cfg.test, "test")?;
    let model = load_tensor::<f64>(&model_path)?;
    let test = load_observations::<f64>(&test_path)?;
    let value = observed_rmse(&model, &test)?;
    let path = out_path(cfg, "eval.csv")?;
    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(["model", "test", "rmse"])?;
    }
    w.write_record([model_path.display().to_string(), test_path.display().to_string(), value.to_string()])?;
    w.flush()?;
    writeln!(out, "rmse {value}")?;
    Ok(())
}

/// Times both gauges over `cfg.sizes`; writes `bench.csv`.
pub fn run_bench(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<()> {
    cfg.validate()?;
    let rows = bench(cfg)?;
    let mut w = csv_writer(&out_path(cfg, "bench.csv")?)?;
    w.write_record(["p", "gauge", "seed", "seconds", "iterations"])?;
    for r in &rows {
        w.write_record([r.p.to_string(), r.gauge.to_string(), r.seed.to_string(), r.seconds.to_string(), r.iterations.to_string()])?;
    }
    w.flush()?;
    for (p, ratio) in time_ratios(&rows, &cfg.sizes) {
        writeln!(out, "p {p}: envelope/trace time ratio {ratio:.3}")?;
    }
    Ok(())
}
