use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spde_hypotest_cli::commands::{run, Command};
use spde_hypotest_cli::{CliError, ConfigError, RunConfig};

const THREADS_VAR: &str = "SPDE_HYPOTEST_THREADS";

#[derive(Parser)]
#[command(name = "spde-hypotest", version, about = "Simulate, test and verify drift hypothesis tests for the stochastic heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write mode trajectories as CSV (t,u_1,...,u_N)
    Simulate(Opts),
    /// Simulate one path under --theta and print the test decision as JSON
    Test(Opts),
    /// Monte Carlo Type I error under theta0
    Type1(Opts),
    /// Monte Carlo power under theta1
    Power(Opts),
    /// Type I and power over a --sweep of T (large-t) or N (large-n)
    Sweep(Opts),
    /// CGF (--table cgf) or rate-function (--table rate) table
    SldTable(Opts),
    /// Paired comparison of the test against the same test with --compare-shift
    Compare(Opts),
}

macro_rules! options {
    ($($field:ident => $help:literal),* $(,)?) => {
        #[derive(Args)]
        struct Opts {
            /// Flat key=value config file; flags override it
            #[arg(long)]
            config: Option<PathBuf>,
            $(
                #[doc = $help]
                #[arg(long, allow_hyphen_values = true)]
                $field: Option<String>,
            )*
        }

        impl Opts {
            fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field), v.as_str()));
                    }
                )*
                out
            }
        }
    };
}

options! {
    theta => "True drift used by simulate and test",
    theta0 => "Null hypothesis drift",
    theta1 => "Alternative drift (> theta0)",
    sigma => "Noise amplitude [default: 1]",
    beta => "Order of the drift operator [default: 1]",
    gamma => "Noise regularity, 2*gamma > dim [default: 1]",
    dim => "Spatial dimension for power-law eigenvalues [default: 1]",
    varpi => "Power-law eigenvalue constant [default: 1]",
    eigen_model => "interval or power-law [default: interval]",
    length => "Interval length for the interval model [default: pi]",
    n_modes => "Number of Fourier modes N [default: 1]",
    horizon => "Observation horizon T [default: 1]",
    steps_per_unit => "Time steps per unit time for gridded simulation [default: 100]",
    alpha => "Significance level [default: 0.05]",
    delta => "Threshold correction delta [default: 0]",
    shift => "Additive shift of the log threshold [default: 0]",
    compare_shift => "Threshold shift of the second test in compare [default: -1]",
    regime => "large-t or large-n [default: large-t]",
    reps => "Monte Carlo replicates [default: 1000]",
    seed => "Base seed [default: 0]",
    sweep => "Comma-separated T values (large-t) or N values (large-n)",
    grid => "Comma-separated eps (cgf table) or eta (rate table) values",
    table => "cgf or rate [default: cgf]",
    sampler => "exact or grid [default: exact]",
    out => "Output file [default: stdout]",
    format => "csv or json [default: csv]",
}

fn build_config(opts: &Opts) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text, &path.display().to_string())?;
    }
    for (key, value) in opts.pairs() {
        cfg.set(key, value).map_err(|e| ConfigError(format!("flag --{}: {e}", key.replace('_', "-"))))?;
    }
    Ok(cfg)
}

fn init_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Cmd::Simulate(o) => (Command::Simulate, o),
        Cmd::Test(o) => (Command::Test, o),
        Cmd::Type1(o) => (Command::Type1, o),
        Cmd::Power(o) => (Command::Power, o),
        Cmd::Sweep(o) => (Command::Sweep, o),
        Cmd::SldTable(o) => (Command::SldTable, o),
        Cmd::Compare(o) => (Command::Compare, o),
    };
    let result = init_threads()
        .and_then(|_| build_config(opts))
        .map_err(CliError::Config)
        .and_then(|cfg| run(command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spde-hypotest: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
