//! Argument parsing and subcommand dispatch.
//!
//! Every subcommand reads one JSON instance file. JSON documents go to the
//! writer passed to [`run_command`] (standard output for the binary), CSV
//! goes to `--out` paths. Failures are reported as
//! `{"error": kind, "message": text}` with a nonzero exit status.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use arqsched_core::bounds::BoundsReport;
use arqsched_core::policy::{classify_system, compare_with_lag_cap, PolicyError};
use arqsched_core::sim::{SimConfig, SimError, SimPolicy, Simulator, DEFAULT_EPISODES, DEFAULT_HORIZON};
use arqsched_core::tolerance::{DEFAULT_DP_LAG_CAP, DEFAULT_LAG_CAP};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::format::{write_curves, write_trace, RefLines};
use crate::instance::{Instance, InstanceError};
use crate::parallel;
use crate::suite::{all_hard_checks_pass, run_suite, SuiteOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INSTANCE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

const DEFAULT_DP_HORIZON: usize = 6;

#[derive(Debug, Parser)]
#[command(name = "arqsched", version, about = "Greedy ARQ-feedback scheduling over three-state Markov channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that the instance is a valid channel and reward vector.
    Validate { instance: PathBuf },
    /// Stationary distribution and mixing diagnostics.
    SteadyState { instance: PathBuf },
    /// Type I or type II.
    Classify { instance: PathBuf },
    /// Reward curves r_j(k) as CSV.
    Curves {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_LAG_CAP)]
        kmax: usize,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the reference lines (steady-state and p_2 rewards) as JSON.
        #[arg(long)]
        refs: Option<PathBuf>,
    },
    /// Closed-form lower and upper bounds on the greedy sum reward.
    Bounds {
        instance: PathBuf,
        /// Also simulate greedy and genie and write the comparison as JSON.
        #[arg(long)]
        sandwich: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte Carlo estimate of a policy's sum reward.
    Simulate {
        instance: PathBuf,
        #[arg(long)]
        policy: Option<SimPolicy>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        burn_in: Option<usize>,
        /// Per-slot trace of episode 0 as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy against the finite-horizon optimum.
    CompareOptimal {
        instance: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        /// Fail unless greedy is optimal among policies that keep a user after F3.
        #[arg(long, action = clap::ArgAction::Set)]
        restricted: Option<bool>,
    },
    /// Run every structural check and report each one.
    Verify {
        instance: PathBuf,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        random_instances: Option<usize>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Instance(e) => e.kind(),
            CliError::Output { .. } => "OutputError",
            CliError::Sim(SimError::ZeroHorizon) => "ZeroHorizon",
            CliError::Sim(SimError::ZeroEpisodes) => "ZeroEpisodes",
            CliError::Sim(SimError::BurnInTooLong { .. }) => "BurnInTooLong",
            CliError::Policy(PolicyError::CapTooSmall { .. }) => "CapTooSmall",
            CliError::Policy(PolicyError::EmptyHorizon) => "EmptyHorizon",
            CliError::Policy(PolicyError::NotTypeI) => "NotTypeI",
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Instance(_) => EXIT_INVALID_INSTANCE,
            CliError::Output { .. } | CliError::Sim(_) | CliError::Policy(_) => EXIT_USAGE,
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand,
/// writing JSON documents to `out`. Returns the process exit status.
pub fn run_command<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                kind => {
                    let name = match kind {
                        ErrorKind::InvalidSubcommand | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                            "UnknownCommand"
                        }
                        _ => "UsageError",
                    };
                    let message = e.render().to_string();
                    emit(out, &json!({"error": name, "message": message.trim_end()}));
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            emit(out, &json!({"error": e.kind(), "message": e.to_string()}));
            e.exit_code()
        }
    }
}

fn emit<W: Write, T: Serialize + ?Sized>(out: &mut W, doc: &T) {
    let text = serde_json::to_string_pretty(doc).expect("reports serialize");
    let _ = writeln!(out, "{text}");
    let _ = out.flush();
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Output { path: path.display().to_string(), source })
}

fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    emit(&mut w, doc);
    w.flush().map_err(|source| CliError::Output { path: path.display().to_string(), source })
}

fn sim_config(
    inst: &Instance,
    policy: Option<SimPolicy>,
    horizon: Option<usize>,
    episodes: Option<usize>,
    seed: Option<u64>,
) -> SimConfig {
    let mut config =
        SimConfig::new(inst.p.clone(), inst.alpha, policy.or(inst.sim.policy).unwrap_or(SimPolicy::GreedyStructured))
            .with_horizon(horizon.or(inst.sim.horizon).unwrap_or(DEFAULT_HORIZON))
            .with_episodes(episodes.or(inst.sim.episodes).unwrap_or(DEFAULT_EPISODES))
            .with_seed(seed.or(inst.sim.seed).unwrap_or(0));
    if let Some(b) = inst.sim.burn_in {
        config = config.with_burn_in(b);
    }
    config
}

fn dispatch<W: Write>(command: Command, out: &mut W) -> Result<i32, CliError> {
    match command {
        Command::Validate { instance } => {
            let inst = Instance::load(&instance)?;
            emit(out, &json!({"valid": true, "type": classify_system(&inst.p, &inst.alpha)}));
        }
        Command::SteadyState { instance } => {
            let inst = Instance::load(&instance)?;
            emit(
                out,
                &json!({
                    "steady_state": inst.p.steady_state(),
                    "steady_reward": inst.p.steady_reward(&inst.alpha),
                    "regularity_exponent": inst.p.regularity_exponent(),
                    "mixing_lag": inst.p.mixing_lag(),
                    "mixes_within_cap": inst.p.mixes_within_cap(),
                }),
            );
        }
        Command::Classify { instance } => {
            let inst = Instance::load(&instance)?;
            emit(out, &json!({"type": classify_system(&inst.p, &inst.alpha)}));
        }
        Command::Curves { instance, kmax, out: path, refs } => {
            let inst = Instance::load(&instance)?;
            let written = match &path {
                Some(path) => write_curves(create(path)?, &inst.p, &inst.alpha, kmax),
                None => write_curves(&mut *out, &inst.p, &inst.alpha, kmax),
            };
            written.map_err(|source| CliError::Output {
                path: path.as_ref().map_or("<stdout>".into(), |p| p.display().to_string()),
                source,
            })?;
            if let Some(refs) = refs {
                write_json(&refs, &RefLines::new(&inst.p, &inst.alpha))?;
            }
        }
        Command::Bounds { instance, sandwich, horizon, episodes, seed } => {
            let inst = Instance::load(&instance)?;
            emit(out, &BoundsReport::new(&inst.p, &inst.alpha));
            if let Some(path) = sandwich {
                let report = parallel::sandwich(&sim_config(&inst, None, horizon, episodes, seed))?;
                write_json(&path, &report)?;
                if !report.pass() {
                    return Ok(EXIT_CHECK_FAILED);
                }
            }
        }
        Command::Simulate { instance, policy, horizon, episodes, seed, burn_in, out: path } => {
            let inst = Instance::load(&instance)?;
            let mut config = sim_config(&inst, policy, horizon, episodes, seed);
            if let Some(b) = burn_in {
                config = config.with_burn_in(b);
            }
            let result = parallel::estimate(config.clone())?;
            if let Some(path) = path {
                let trace = Simulator::new(config)?.run_episode(0);
                write_trace(create(&path)?, &trace)
                    .map_err(|source| CliError::Output { path: path.display().to_string(), source })?;
            }
            emit(out, &result);
        }
        Command::CompareOptimal { instance, horizon, restricted } => {
            let inst = Instance::load(&instance)?;
            let horizon = horizon.or(inst.dp.horizon).unwrap_or(DEFAULT_DP_HORIZON);
            let lag_cap = inst.dp.lag_cap.unwrap_or(horizon.max(DEFAULT_DP_LAG_CAP));
            let report = compare_with_lag_cap(&inst.p, &inst.alpha, horizon, lag_cap)?;
            emit(out, &report);
            let tol = inst.p.tolerances().algebraic;
            if restricted.or(inst.dp.restricted).unwrap_or(false) && report.restricted_gap > tol {
                return Ok(EXIT_CHECK_FAILED);
            }
        }
        Command::Verify { instance, kmax, seed, random_instances } => {
            let inst = Instance::load(&instance)?;
            let defaults = SuiteOptions::default();
            let opts = SuiteOptions {
                k_max: kmax.or(inst.verify.k_max).unwrap_or(defaults.k_max),
                random_instances: random_instances
                    .or(inst.verify.random_instances)
                    .unwrap_or(defaults.random_instances),
                seed: seed.unwrap_or(defaults.seed),
                dp_horizon: inst.dp.horizon.unwrap_or(defaults.dp_horizon),
            };
            let reports = run_suite(&inst.p, &inst.alpha, &opts);
            emit(out, &reports);
            if !all_hard_checks_pass(&reports) {
                return Ok(EXIT_CHECK_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}
