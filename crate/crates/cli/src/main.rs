use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

/// Certificates of complete stabilizability for truncated linear control systems.
///
/// Exit codes: 0 certified, 1 refuted, 2 inconclusive, 3 input/output error.
#[derive(Parser, Debug)]
#[command(name = "stabcert", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// System description: a JSON file, or inline JSON starting with `{`.
    #[arg(long, global = true)]
    pub system: Option<String>,
    /// Output directory for report.json and CSV tables.
    #[arg(long, global = true, default_value = "stabcert-out")]
    pub out: PathBuf,
    /// RNG seed; 0 for analyses, a fixed value for verify-all when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated decay rates.
    #[arg(long, global = true, value_delimiter = ',')]
    pub alpha_grid: Option<Vec<f64>>,
    /// Comma-separated horizons.
    #[arg(long, global = true, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    /// Target decay rate for feedback synthesis.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Tolerance overrides, `key=value` (keys: gramian, riccati).
    #[arg(long, global = true, value_delimiter = ',')]
    pub tol: Vec<String>,
    /// Random directions per certificate decision.
    #[arg(long, global = true, default_value_t = 256)]
    pub samples: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Observability Gramian at one horizon.
    Gramian {
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
    },
    /// Sweep (or single check) of weak observability certificates.
    Weakobs(WeakobsArgs),
    /// Explicit constants from spectral and truncated-observability inequalities.
    Constants {
        #[arg(long, value_enum, default_value_t = Formula::Both)]
        formula: Formula,
        /// Horizon of the truncated observability constant.
        #[arg(long, default_value_t = 0.5)]
        t0: f64,
    },
    /// Feedback with decay rate `--mu`, justified by a certificate sweep.
    Stabilize(StabilizeArgs),
    /// Checks on a periodic system.
    Periodic(PeriodicArgs),
    /// Ready-made pipelines.
    Example {
        #[command(subcommand)]
        which: Example,
    },
    /// Runs the acceptance suite and prints a pass/fail table.
    VerifyAll,
}

#[derive(Args, Debug, Clone)]
pub struct WeakobsArgs {
    /// `constant` (with `--residual-c`) or `feedback`.
    #[arg(long, default_value = "constant")]
    pub residual: String,
    #[arg(long, default_value_t = 1.0)]
    pub residual_c: f64,
    /// Check one certificate instead of sweeping: requires --horizon, --alpha, --d.
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct StabilizeArgs {
    /// Also build a concatenated steering control with this weight `β`.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub t_seg: f64,
    #[arg(long, default_value_t = 6)]
    pub segments: usize,
}

#[derive(Args, Debug, Clone)]
pub struct PeriodicArgs {
    /// Residual index `k` of the one-period inequality.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub n_k: usize,
    /// Observation constant; defaults to `√α e^{k²/2}` for the `e^{−k²}` family.
    #[arg(long)]
    pub c_k: Option<f64>,
    /// Search for a null-controllability counterexample instead.
    #[arg(long)]
    pub refute_null_controllability: bool,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long = "C", alias = "big-c", default_value_t = 10.0)]
    pub big_c: f64,
}

#[derive(Subcommand, Debug)]
pub enum Example {
    /// Heat equation on (0,1) controlled at one point.
    PointHeat {
        /// A number, `p/q`, or `cf` for the continued-fraction location.
        #[arg(long, default_value = "cf")]
        x0: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 8)]
        modes: usize,
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        #[arg(long, value_enum, default_value_t = Check::Weakobs)]
        check: Check,
    },
    /// Periodic system with the `e^{−k²}` switching windows.
    PeriodicL2 {
        #[arg(long, default_value_t = 10)]
        modes: usize,
        #[command(flatten)]
        periodic: PeriodicArgs,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formula {
    B1,
    B2,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Weakobs,
    Constants,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("STABCERT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
