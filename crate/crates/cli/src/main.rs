use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcomp_cli::{commands, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "tcomp", version, about = "Low-rank tensor completion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic Tucker tensor and its train/validation/test splits.
    GenSynthetic,
    /// Build a tensor whose trace norm is strictly below its rank regularizer.
    MakeCounterexample,
    /// Complete a tensor from training observations.
    Complete,
    /// Tune gamma on a validation set.
    Sweep,
    /// Test RMSE of a model.
    Eval,
    /// Time both gauges over tensor sizes.
    Bench,
}

/// Every flag overrides the same key in `--config`.
#[derive(Args)]
struct Flags {
    /// File of `key = value` lines using the flag names as keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dimensions, e.g. `40,20,10`.
    #[arg(long, global = true)]
    shape: Option<String>,
    /// Tucker core ranks.
    #[arg(long, global = true)]
    ranks: Option<String>,
    #[arg(long, global = true)]
    noise_var: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// `trace` or `envelope`.
    #[arg(long, global = true)]
    gauge: Option<String>,
    /// `estimate` or a positive radius.
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    gamma: Option<String>,
    /// Comma-separated values, or `default` for 1e-7, ..., 1.
    #[arg(long, global = true)]
    gamma_grid: Option<String>,
    #[arg(long, global = true)]
    beta: Option<String>,
    #[arg(long, global = true)]
    max_iters: Option<String>,
    #[arg(long, global = true)]
    tol: Option<String>,
    #[arg(long, global = true)]
    train_frac: Option<String>,
    #[arg(long, global = true)]
    val_frac: Option<String>,
    #[arg(long, global = true)]
    test_frac: Option<String>,
    /// Seeds per size for `bench`.
    #[arg(long, global = true)]
    repetitions: Option<String>,
    /// Cube sizes for `bench`, e.g. `20,40,60`.
    #[arg(long, global = true)]
    sizes: Option<String>,
    #[arg(long, global = true)]
    out_dir: Option<String>,
    /// Training observation file.
    #[arg(long, global = true)]
    train: Option<String>,
    #[arg(long, global = true)]
    validation: Option<String>,
    #[arg(long, global = true)]
    test: Option<String>,
    /// Tensor file to evaluate.
    #[arg(long, global = true)]
    model: Option<String>,
}

impl Flags {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let pairs = [
            ("shape", &self.shape),
            ("ranks", &self.ranks),
            ("noise_var", &self.noise_var),
            ("seed", &self.seed),
            ("gauge", &self.gauge),
            ("alpha", &self.alpha),
            ("gamma", &self.gamma),
            ("gamma_grid", &self.gamma_grid),
            ("beta", &self.beta),
            ("max_iters", &self.max_iters),
            ("tol", &self.tol),
            ("train_frac", &self.train_frac),
            ("val_frac", &self.val_frac),
            ("test_frac", &self.test_frac),
            ("repetitions", &self.repetitions),
            ("sizes", &self.sizes),
            ("out_dir", &self.out_dir),
            ("train", &self.train),
            ("validation", &self.validation),
            ("test", &self.test),
            ("model", &self.model),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = cli.flags.config()?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::GenSynthetic => commands::gen_synthetic(&cfg, &mut out),
        Command::MakeCounterexample => commands::make_counterexample(&cfg, &mut out),
        Command::Complete => commands::complete(&cfg, &mut out),
        Command::Sweep => commands::sweep(&cfg, &mut out),
        Command::Eval => commands::eval(&cfg, &mut out),
        Command::Bench => commands::run_bench(&cfg, &mut out),
    };
    out.flush()?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tcomp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
