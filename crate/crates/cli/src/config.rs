//! Experiment settings, assembled from defaults, an optional `key = value`
//! file and command-line flags, in that order of precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tcomp_core::{estimate_alpha, Config, Gauge, Observations};

use crate::error::{CliError, CliResult};

/// Spectral penalty selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GaugeKind {
    Trace,
    Envelope,
}

impl FromStr for GaugeKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "trace" => Ok(GaugeKind::Trace),
            "envelope" => Ok(GaugeKind::Envelope),
            _ => Err(CliError::usage(format!("unknown gauge {s:?} (expected trace or envelope)"))),
        }
    }
}

impl fmt::Display for GaugeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GaugeKind::Trace => "trace",
            GaugeKind::Envelope => "envelope",
        })
    }
}

/// Radius of the envelope ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaPolicy {
    /// Estimated from the training observations.
    Estimate,
    Fixed(f64),
}

impl FromStr for AlphaPolicy {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        if s == "estimate" {
            return Ok(AlphaPolicy::Estimate);
        }
        let a: f64 = parse_value("alpha", s)?;
        if !(a > 0.0 && a.is_finite()) {
            return Err(CliError::usage(format!("alpha must be positive, got {s}")));
        }
        Ok(AlphaPolicy::Fixed(a))
    }
}

impl fmt::Display for AlphaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaPolicy::Estimate => f.write_str("estimate"),
            AlphaPolicy::Fixed(a) => write!(f, "{a}"),
        }
    }
}

/// `10^j` for `j = -7, ..., 0`.
pub fn default_gamma_grid() -> Vec<f64> {
    (-7..=0).map(|j| 10f64.powi(j)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub shape: Vec<usize>,
    pub ranks: Vec<usize>,
    pub noise_var: f64,
    pub seed: u64,
    pub gauge: GaugeKind,
    pub alpha: AlphaPolicy,
    pub gamma: f64,
    pub gamma_grid: Vec<f64>,
    pub beta: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub repetitions: usize,
    pub sizes: Vec<usize>,
    pub out_dir: PathBuf,
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            shape: vec![40, 20, 10],
            ranks: vec![12, 6, 3],
            noise_var: 1e-3,
            seed: 0,
            gauge: GaugeKind::Trace,
            alpha: AlphaPolicy::Estimate,
            gamma: 1e-3,
            gamma_grid: default_gamma_grid(),
            beta: 1.0,
            max_iters: 500,
            tol: 1e-5,
            split: [0.1, 0.45, 0.45],
            repetitions: 20,
            sizes: vec![20, 40, 60],
            out_dir: PathBuf::from("."),
            train: None,
            validation: None,
            test: None,
            model: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("bad value {value:?} for {key}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> CliResult<Vec<T>> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

impl ExperimentConfig {
    /// Sets one field by name; `-` and `_` are interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "shape" => self.shape = parse_list(&key, v)?,
            "ranks" => self.ranks = parse_list(&key, v)?,
            "noise_var" => self.noise_var = parse_value(&key, v)?,
            "seed" => self.seed = parse_value(&key, v)?,
            "gauge" => self.gauge = v.parse()?,
            "alpha" => self.alpha = v.parse()?,
            "gamma" => self.gamma = parse_value(&key, v)?,
            "gamma_grid" => {
                self.gamma_grid = if v == "default" { default_gamma_grid() } else { parse_list(&key, v)? }
            }
            "beta" => self.beta = parse_value(&key, v)?,
            "max_iters" => self.max_iters = parse_value(&key, v)?,
            "tol" => self.tol = parse_value(&key, v)?,
            "train_frac" => self.split[0] = parse_value(&key, v)?,
            "val_frac" => self.split[1] = parse_value(&key, v)?,
            "test_frac" => self.split[2] = parse_value(&key, v)?,
            "repetitions" => self.repetitions = parse_value(&key, v)?,
            "sizes" => self.sizes = parse_list(&key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "train" => self.train = Some(PathBuf::from(v)),
            "validation" => self.validation = Some(PathBuf::from(v)),
            "test" => self.test = Some(PathBuf::from(v)),
            "model" => self.model = Some(PathBuf::from(v)),
            _ => return Err(CliError::usage(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_str(&mut self, text: &str) -> CliResult<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", n + 1)))?;
            self.set(k, v).map_err(|e| CliError::usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.apply_str(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.split.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
            return Err(CliError::usage(format!("split fractions must lie in (0, 1), got {:?}", self.split)));
        }
        if self.split.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(CliError::usage(format!("split fractions sum above one: {:?}", self.split)));
        }
        if self.gamma_grid.is_empty() {
            return Err(CliError::usage("empty gamma grid"));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !self.gamma_grid.iter().all(|&g| positive(g)) || !positive(self.gamma) {
            return Err(CliError::usage("gamma values must be positive"));
        }
        if !positive(self.beta) || !(self.tol >= 0.0) || self.max_iters == 0 {
            return Err(CliError::usage("beta must be positive, tol nonnegative, max-iters at least one"));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(CliError::usage("noise variance must be nonnegative"));
        }
        if self.repetitions == 0 || self.sizes.is_empty() {
            return Err(CliError::usage("need at least one repetition and one size"));
        }
        Ok(())
    }

    /// The gauge for `kind`, resolving the envelope radius against `train`.
    pub fn gauge_for(&self, kind: GaugeKind, train: &Observations) -> CliResult<Gauge> {
        Ok(match kind {
            GaugeKind::Trace => Gauge::L1,
            GaugeKind::Envelope => Gauge::card_envelope(match self.alpha {
                AlphaPolicy::Estimate => estimate_alpha(train),
                AlphaPolicy::Fixed(a) => a,
            })?,
        })
    }

    pub fn solver(&self, gauge: Gauge, gamma: f64) -> Config {
        let mut cfg = Config::new(gauge, gamma);
        cfg.beta = self.beta;
        cfg.max_outer_iters = self.max_iters;
        cfg.primal_tol = self.tol;
        cfg
    }

    pub fn require(path: &Option<PathBuf>, flag: &str) -> CliResult<PathBuf> {
        path.clone().ok_or_else(|| CliError::usage(format!("--{flag} is required")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut c = ExperimentConfig::default();
        c.apply_str("# run\nshape = 4, 5, 6\ngamma-grid = 1e-2,1\n\ngauge=envelope\nalpha = 3.5\n").unwrap();
        c.set("gauge", "trace").unwrap();
        assert_eq!(c.shape, vec![4, 5, 6]);
        assert_eq!(c.gamma_grid, vec![1e-2, 1.0]);
        assert_eq!(c.gauge, GaugeKind::Trace);
        assert_eq!(c.alpha, AlphaPolicy::Fixed(3.5));
    }

    #[test]
    fn bad_lines_name_the_line() {
        let mut c = ExperimentConfig::default();
        let e = c.apply_str("seed = 1\nnonsense\n").unwrap_err();
        assert!(e.to_string().contains("line 2"));
        assert!(c.apply_str("colour = red").is_err());
        assert!(c.set("alpha", "-1").is_err());
    }

    #[test]
    fn validation() {
        let mut c = ExperimentConfig::default();
        assert!(c.validate().is_ok());
        c.split = [0.6, 0.3, 0.2];
        assert!(c.validate().is_err());
        c.split = [0.1, 0.45, 0.45];
        c.gamma_grid.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_grid() {
        let g = default_gamma_grid();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 1e-7);
        assert_eq!(g[7], 1.0);
    }
}
