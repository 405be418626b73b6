use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use nonlocal_burgers::evolution::{SimulationConfig, SmallnessPolicy};
use nonlocal_burgers::Error;

mod commands;
mod sweep;

#[derive(Parser)]
#[command(name = "nlburgers", version, about = "Nonlocal viscous Burgers simulations and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Enforce,
    Warn,
}

impl From<PolicyArg> for SmallnessPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Enforce => SmallnessPolicy::Enforce,
            PolicyArg::Warn => SmallnessPolicy::Warn,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Simulation config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Seed for randomized initial data; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Smallness policy; overrides the config.
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the kernel hypotheses and print A, B and C_GK.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one simulation and write its run directory.
    Simulate(RunArgs),
    /// Tabulate the Burgers source profile.
    #[command(allow_negative_numbers = true)]
    Profile {
        #[arg(long)]
        mass: f64,
        #[arg(long = "a")]
        a: f64,
        #[arg(long = "b")]
        b: f64,
        #[arg(long)]
        out: PathBuf,
        /// Table covers ξ in [-xi_max, xi_max]; default 12 √A.
        #[arg(long)]
        xi_max: Option<f64>,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Check a finished run against every claim and write verify.json.
    #[command(allow_negative_numbers = true)]
    Verify {
        #[arg(long)]
        run: PathBuf,
        /// A second run whose initial data dominate the first pointwise.
        #[arg(long)]
        paired: Option<PathBuf>,
        /// Profile moments: lattice moments of the sampled kernels or the
        /// continuous ones.
        #[arg(long, value_enum, default_value_t = MomentsArg::Lattice)]
        moments: MomentsArg,
        #[arg(long)]
        profile_a: Option<f64>,
        #[arg(long)]
        profile_b: Option<f64>,
        /// Report path; default `<run>/verify.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a family of simulations in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MomentsArg {
    Lattice,
    Continuous,
}

/// Exit 1: a check or hypothesis failed. Exit 2: bad input.
enum Failure {
    Check(anyhow::Error),
    Usage(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Check(e)
    }
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

/// Reads a config; parse and IO errors are usage errors.
fn load_config(path: &Path, seed: Option<u64>, policy: Option<PolicyArg>) -> Result<SimulationConfig, Failure> {
    let mut cfg = SimulationConfig::from_path(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(p) = policy {
        cfg.policy = p.into();
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

/// Input errors are usage errors; everything else is a failed check.
fn classify(e: Error) -> Failure {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => usage(e),
        other => Failure::Check(other.into()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => commands::validate(&config),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Profile {
            mass,
            a,
            b,
            out,
            xi_max,
            points,
        } => commands::profile(mass, a, b, &out, xi_max, points),
        Command::Verify {
            run,
            paired,
            moments,
            profile_a,
            profile_b,
            out,
        } => commands::verify(&run, paired.as_deref(), moments, profile_a, profile_b, out.as_deref()),
        Command::Sweep {
            config,
            out,
            threads,
            seed,
            policy,
        } => sweep::run(&config, &out, threads, seed, policy),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
