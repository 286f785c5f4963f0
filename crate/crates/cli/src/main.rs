//! `rtcode`: design and verify real-time variable-rate source codes from a
//! JSON problem spec.
//!
//! Exit status: 0 success, 1 a verification check failed, 2 bad input
//! (parse or validation), 3 an enumeration exceeded `--budget`.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, Opts, RunConfig};
use rtcode_core::{Error, ProblemSpec};

#[derive(Parser)]
#[command(name = "rtcode", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a spec, then echo it.
    Validate(Opts),
    /// Find the best system with `--solver`; writes the result and policy files.
    Optimize(Opts),
    /// Optimize over `--lambda-grid` and write a CSV of the operating points.
    Sweep(Opts),
    /// Run the structural checks; exits 1 if any fails.
    Verify(Opts),
    /// Monte Carlo estimate of the cost of a system.
    Simulate(Opts),
}

pub enum Outcome {
    Ok,
    CheckFailed,
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::BudgetExceeded { .. }) => 3,
            _ => 2,
        }
    }
}

fn run(name: &'static str, opts: &Opts) -> Result<Outcome, Failure> {
    let mut spec = ProblemSpec::from_path(&opts.spec).map_err(|e| match e {
        Error::Io(io) => Failure::Input(format!("{}: {io}", opts.spec.display())),
        other => Failure::Core(other),
    })?;
    if opts.no_si {
        spec.si_channel = None;
        spec.w_size = 0;
        spec.zw_size = 0;
    }
    let cfg = RunConfig::resolve(name, opts, &spec)?;
    if cfg.threads > 0 {
        // Only fails if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    match name {
        "validate" => commands::validate(&cfg, &spec),
        "optimize" => commands::optimize(&cfg, &spec),
        "sweep" => commands::sweep(&cfg, &spec),
        "verify" => commands::verify(&cfg, &spec),
        _ => commands::simulate_cmd(&cfg, &spec),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, opts) = match &cli.command {
        Command::Validate(o) => ("validate", o),
        Command::Optimize(o) => ("optimize", o),
        Command::Sweep(o) => ("sweep", o),
        Command::Verify(o) => ("verify", o),
        Command::Simulate(o) => ("simulate", o),
    };
    match run(name, opts) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => {
            eprintln!("rtcode: a verification check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("rtcode: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
