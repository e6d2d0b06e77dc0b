use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmc_core::estimate::{count, estimate_kernel};
use cmc_core::harness::run_config_file;
use cmc_core::inference::gof_test;
use cmc_core::io::{read_json, read_trajectory_file, write_json, write_trajectory_file};
use cmc_core::mixing::mixing_report;
use cmc_core::model::{RewardModel, TargetPolicy, TransitionModel};
use cmc_core::policy::LoggingPolicy;
use cmc_core::rl::{evaluate_from_counts, optimal_value_interval};
use cmc_core::simulate::{simulate, uniform_initial, Trajectory};
use cmc_core::{CmcError, Result};

#[derive(Parser)]
#[command(name = "cmc", version, about = "Estimation and inference for controlled Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory and write it as CSV.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(short = 'n', long = "horizon")]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count-based kernel estimate.
    Estimate {
        #[arg(long)]
        traj: PathBuf,
        /// Number of states; inferred from the data when omitted.
        #[arg(long)]
        states: Option<usize>,
        /// Number of actions; inferred from the data when omitted.
        #[arg(long)]
        actions: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pooled chi-square test against a null kernel.
    Gof {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        null: PathBuf,
        /// Significance level.
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plug-in evaluation of a target policy with intervals.
    Eval {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        rewards: PathBuf,
        /// Significance level; intervals have confidence `1 − level`.
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plug-in optimal policy and an interval for its value.
    Optimal {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        rewards: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force mixing coefficients on a small instance.
    Mixing {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo experiment described by a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn check_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(CmcError::InvalidInput(format!("level {level} outside (0,1)")));
    }
    Ok(1.0 - level)
}

fn load_traj(path: &Path, d: usize, k: usize) -> Result<Trajectory> {
    let traj = read_trajectory_file(path)?;
    traj.check_range(d, k)?;
    Ok(traj)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { model, policy, n, seed, out } => {
            let model: TransitionModel = read_json(&model)?;
            let policy: LoggingPolicy = read_json(&policy)?;
            let traj = simulate(&model, &policy, n, &uniform_initial(model.d()), seed)?;
            match out {
                Some(p) => write_trajectory_file(&traj, &p),
                None => cmc_core::io::write_trajectory(&traj, std::io::stdout()),
            }
        }
        Command::Estimate { traj, states, actions, out } => {
            let t = read_trajectory_file(&traj)?;
            let d = states.unwrap_or_else(|| t.states.iter().max().map_or(1, |m| m + 1));
            let k = actions.unwrap_or_else(|| t.actions.iter().max().map_or(1, |m| m + 1));
            let est = estimate_kernel(&count(&t, d, k)?);
            write_json(&est, out.as_deref())
        }
        Command::Gof { traj, null, level, out } => {
            let null: TransitionModel = read_json(&null)?;
            let t = load_traj(&traj, null.d(), null.k())?;
            write_json(&gof_test(&count(&t, null.d(), null.k())?, &null, level)?, out.as_deref())
        }
        Command::Eval { traj, target, rewards, level, out } => {
            let confidence = check_level(level)?;
            let target: TargetPolicy = read_json(&target)?;
            let rewards: RewardModel = read_json(&rewards)?;
            let t = load_traj(&traj, target.d(), target.k())?;
            let report = evaluate_from_counts(&count(&t, target.d(), target.k())?, &target, &rewards, confidence)?;
            write_json(&report, out.as_deref())
        }
        Command::Optimal { traj, rewards, level, out } => {
            let confidence = check_level(level)?;
            let rewards: RewardModel = read_json(&rewards)?;
            let t = load_traj(&traj, rewards.d(), rewards.k())?;
            write_json(&optimal_value_interval(&count(&t, rewards.d(), rewards.k())?, &rewards, confidence)?, out.as_deref())
        }
        Command::Mixing { model, policy, horizon, out } => {
            let model: TransitionModel = read_json(&model)?;
            let policy: LoggingPolicy = read_json(&policy)?;
            write_json(&mixing_report(&model, &policy, &uniform_initial(model.d()), horizon)?, out.as_deref())
        }
        Command::Experiment { config, out } => write_json(&run_config_file(&config)?, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
