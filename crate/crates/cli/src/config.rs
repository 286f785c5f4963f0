use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use rtcode_core::{DEFAULT_BUDGET, ProblemSpec};

pub const DEFAULT_LAMBDA_GRID: &str = "0,0.25,0.5,1,2,4";
pub const DEFAULT_VERIFY_TRIALS: usize = 1000;
pub const DEFAULT_SIM_TRIALS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Tracking encoder for a fixed decoder (default: prefix-tree memory with Bayes reproduction).
    Tracking,
    /// Joint search over next-state tables with `--zy-size` states.
    System,
    /// Sliding window over the last `--window` outputs.
    Window,
    /// Belief-state dynamic program.
    Mdp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Full-history vs tracking encoders for a fixed decoder, plus sampled stochastic encoders.
    Tracking,
    /// Belief-state program vs exhaustive infinite-memory search.
    Mdp,
    /// Sliding-window bound against `--zy-size` states.
    Window,
    /// Sampled concavity of stage and downstream costs.
    Concavity,
    /// Belief-measurable encoders with side information.
    SiStructure,
    /// Side-information belief program vs exhaustive search.
    SiMdp,
}

impl Check {
    pub fn defaults(si: bool) -> Vec<Check> {
        if si {
            vec![Check::SiStructure, Check::SiMdp]
        } else {
            vec![Check::Tracking, Check::Mdp, Check::Window, Check::Concavity]
        }
    }
}

/// Options shared by every command.
#[derive(Clone, Debug, Args)]
pub struct Opts {
    /// Problem spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated, strictly increasing lambda values for `sweep`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambda_grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub solver: Option<Solver>,
    /// Sliding-window length.
    #[arg(long)]
    pub window: Option<usize>,
    /// Decoder states; defaults to the problem spec's `zy_size`.
    #[arg(long)]
    pub zy_size: Option<usize>,
    /// Sampled encoders/trials for `verify`, trajectories for `simulate`.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cap on candidates evaluated by any exhaustive routine.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Decoder policy (JSON) to use instead of the default.
    #[arg(long)]
    pub decoder: Option<PathBuf>,
    /// Encoder policy (JSON) for `simulate`; optimized with `--solver` when omitted.
    #[arg(long)]
    pub encoder: Option<PathBuf>,
    /// Checks for `verify`; defaults to every check that applies to the problem spec.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub checks: Option<Vec<Check>>,
    /// Drop the side-information channel from the problem spec.
    #[arg(long)]
    pub no_si: bool,
}

/// Every option after defaults are applied; echoed into each output.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub spec_path: PathBuf,
    pub output_path: Option<PathBuf>,
    pub lambda_grid: Vec<f64>,
    pub solver: Solver,
    pub window: usize,
    pub zy_size: usize,
    pub trials: usize,
    pub seed: u64,
    pub budget: u64,
    pub threads: usize,
    pub decoder_path: Option<PathBuf>,
    pub encoder_path: Option<PathBuf>,
    pub checks: Vec<Check>,
    pub side_information: bool,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl RunConfig {
    pub fn resolve(command: &'static str, o: &Opts, spec: &ProblemSpec) -> Result<Self, ConfigError> {
        let lambda_grid = match &o.lambda_grid {
            Some(g) => g.clone(),
            None => DEFAULT_LAMBDA_GRID.split(',').map(|s| s.parse().unwrap()).collect(),
        };
        if lambda_grid.is_empty() {
            return Err(ConfigError("lambda grid is empty".into()));
        }
        if lambda_grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(ConfigError("lambda grid values must be finite and >= 0".into()));
        }
        if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError("lambda grid must be strictly increasing".into()));
        }
        if o.spec.as_os_str().is_empty() || o.out.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
            return Err(ConfigError("paths must be nonempty".into()));
        }
        let zy_size = o.zy_size.unwrap_or(spec.zy_size);
        if zy_size == 0 {
            return Err(ConfigError("--zy-size must be >= 1".into()));
        }
        let side_information = spec.has_si();
        let default_trials = if command == "simulate" { DEFAULT_SIM_TRIALS } else { DEFAULT_VERIFY_TRIALS };
        Ok(RunConfig {
            command,
            spec_path: o.spec.clone(),
            output_path: o.out.clone(),
            lambda_grid,
            solver: o.solver.unwrap_or(Solver::Tracking),
            window: o.window.unwrap_or(1),
            zy_size,
            trials: o.trials.unwrap_or(default_trials),
            seed: o.seed,
            budget: o.budget,
            threads: o.threads,
            decoder_path: o.decoder.clone(),
            encoder_path: o.encoder.clone(),
            checks: o.checks.clone().unwrap_or_else(|| Check::defaults(side_information)),
            side_information,
        })
    }
}
