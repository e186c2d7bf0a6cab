//! trajlab: validate, score, filter, and benchmark agent trajectories, and
//! simulate the gradient noise of the policy updates they would drive.
//!
//! Option precedence everywhere: command-line flags beat environment
//! variables beat the --config file beat built-in defaults. Exit codes:
//! 0 success, 1 domain failure (bad data, judge down, defects found),
//! 2 usage or I/O trouble (unknown flags, unreadable paths, bad config).

mod commands;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trajlab_core::analysis::ReportFormat;
use trajlab_core::config::JudgeBackendKind;

use commands::CliError;

#[derive(Parser)]
#[command(name = "trajlab", version, about = "Trajectory scoring and gradient-noise lab")]
struct Cli {
    /// TOML config file (schema, reward weights, filter, judge defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// -v for info, -vv for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse trajectories and check every turn against its tag pattern.
    Validate {
        #[arg(long)]
        trajectories: PathBuf,
    },
    /// Score trajectories against their tasks; writes scores.jsonl.
    Score {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        trajectories: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        judge: JudgeArgs,
    },
    /// Split scored trajectories into kept.jsonl / dropped.jsonl by exact
    /// reward requirements.
    FilterSft {
        #[arg(long)]
        trajectories: PathBuf,
        /// scores.jsonl to join on trajectory id; when omitted, rewards
        /// embedded in the trajectory file are used.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Judge final outputs against task checkpoints, aggregated per task
    /// type.
    Bench {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        trajectories: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        #[command(flatten)]
        judge: JudgeArgs,
    },
    /// Classify every reflection instance and report the label histogram.
    Report {
        #[arg(long)]
        trajectories: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        #[command(flatten)]
        judge: JudgeArgs,
    },
    /// Monte Carlo decomposition of policy-gradient variance for the
    /// scenario file; with [[sweep]] points, writes the asymmetry sweep.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario seed; required when the scenario sets
        /// none.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Mock,
    Scripted,
    Remote,
}

impl From<BackendArg> for JudgeBackendKind {
    fn from(value: BackendArg) -> Self {
        match value {
            BackendArg::Mock => JudgeBackendKind::Mock,
            BackendArg::Scripted => JudgeBackendKind::Scripted,
            BackendArg::Remote => JudgeBackendKind::Remote,
        }
    }
}

/// Judge overrides, highest precedence. The env fallbacks implement the
/// flag > env > config-file layering for the two spec'd variables.
#[derive(Debug, Args)]
struct JudgeArgs {
    #[arg(long, value_enum)]
    judge_backend: Option<BackendArg>,
    /// Remote judge URL.
    #[arg(long, env = "TRAJLAB_JUDGE_ENDPOINT")]
    judge_endpoint: Option<String>,
    /// Replay file for the scripted backend.
    #[arg(long)]
    judge_script: Option<PathBuf>,
    /// Model name sent to remote judges.
    #[arg(long)]
    judge_model: Option<String>,
    /// Name of the environment variable holding the bearer token.
    #[arg(long, env = "TRAJLAB_TOKEN_ENV")]
    token_env: Option<String>,
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli).await {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

async fn run(cli: Cli) -> Result<u8, CliError> {
    let config = commands::load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Validate { trajectories } => commands::validate(&config, &trajectories),
        Command::Score {
            tasks,
            trajectories,
            out,
            judge,
        } => commands::score(&config, &tasks, &trajectories, &out, &judge).await,
        Command::FilterSft {
            trajectories,
            scores,
            out,
        } => commands::filter_sft(&config, &trajectories, scores.as_deref(), &out),
        Command::Bench {
            tasks,
            trajectories,
            out,
            format,
            judge,
        } => commands::bench(&config, &tasks, &trajectories, &out, format, &judge).await,
        Command::Report {
            trajectories,
            out,
            format,
            judge,
        } => commands::report(&config, &trajectories, &out, format, &judge).await,
        Command::Simulate {
            scenario,
            seed,
            out,
        } => commands::simulate(&scenario, seed, &out),
    }
}
