//! `conflux`: ingest smart-home logs, detect service conflicts, rank
//! residents, resolve setpoints and run accuracy experiments.

mod diag;
mod io;
mod pipeline;
mod report;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use conflux_core::resolution::Rounding;
use conflux_core::{ResidentId, Strategy};

use crate::diag::Failure;
use crate::pipeline::{IngestArgs, RankArgs, ResolveArgs};

#[derive(Debug, Parser)]
#[command(
    name = "conflux",
    version,
    about = "Detect and resolve service conflicts between residents of a smart home"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn CASAS sensor logs into a merged service-event CSV.
    Ingest {
        /// Home log as LABEL=PATH; the label must match a resident's `home`.
        #[arg(long, required = true, num_args = 1.., value_parser = parse_log)]
        logs: Vec<(String, PathBuf)>,
        /// Sensor registry (TOML).
        #[arg(long)]
        registry: PathBuf,
        /// Resident profiles (TOML).
        #[arg(long)]
        profiles: PathBuf,
        /// First day to keep (YYYY-MM-DD).
        #[arg(long)]
        from: Option<NaiveDate>,
        /// Last day to keep (YYYY-MM-DD).
        #[arg(long)]
        to: Option<NaiveDate>,
        /// Setpoint readings closer than this collapse to the later one.
        #[arg(long, value_name = "SECONDS")]
        settle: Option<i64>,
        /// Output events CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find overlapping, disagreeing service events.
    Detect {
        /// Events CSV, or `-` for stdin.
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        /// Output conflicts JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank the participants of each conflict.
    Rank {
        #[command(flatten)]
        inputs: RankInputs,
        /// Output rankings JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick a setpoint for each conflict.
    Resolve {
        #[command(flatten)]
        inputs: RankInputs,
        /// adaptive, average, use-first or static.
        #[arg(long, default_value = "adaptive")]
        strategy: Strategy,
        /// Fixed resident order for the static strategy, highest first.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<String>>,
        /// Sensor registry supplying per-attribute rounding granularity.
        #[arg(long)]
        registry: Option<PathBuf>,
        /// directional, nearest or none.
        #[arg(long, default_value = "directional", value_parser = parse_rounding)]
        rounding: Rounding,
        /// Rounding step for every attribute, overriding the registry.
        #[arg(long)]
        granularity: Option<f64>,
        /// Output decisions JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte Carlo accuracy experiment.
    Simulate {
        /// Experiment config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output report; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write JSON records instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// Summarise a simulation report CSV or a decisions JSON file.
    Report {
        /// report.csv or decisions.json, or `-` for stdin.
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RankInputs {
    /// Conflicts JSON, or `-` for stdin.
    #[arg(long)]
    conflicts: PathBuf,
    #[arg(long)]
    profiles: PathBuf,
    /// Criteria matrices keyed by conflict type (TOML).
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Offset added to profile values before comparing residents.
    #[arg(long)]
    smoothing: Option<f64>,
}

impl From<RankInputs> for RankArgs {
    fn from(r: RankInputs) -> Self {
        RankArgs {
            conflicts: r.conflicts,
            profiles: r.profiles,
            templates: r.templates,
            smoothing: r.smoothing,
        }
    }
}

fn parse_log(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => Ok((label.to_owned(), PathBuf::from(path))),
        _ => Err(format!("expected LABEL=PATH, got `{s}`")),
    }
}

fn parse_rounding(s: &str) -> Result<Rounding, String> {
    match s {
        "directional" => Ok(Rounding::DirectionalTowardTopRank),
        "nearest" => Ok(Rounding::Nearest),
        "none" => Ok(Rounding::None),
        _ => Err(format!("unknown rounding `{s}`; expected directional, nearest or none")),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Ingest {
            logs,
            registry,
            profiles,
            from,
            to,
            settle,
            out,
        } => pipeline::ingest(&IngestArgs {
            logs,
            registry,
            profiles,
            from,
            to,
            settle_seconds: settle,
            out,
        }),
        Command::Detect { events, profiles, out } => pipeline::detect(&events, &profiles, out.as_ref()),
        Command::Rank { inputs, out } => pipeline::rank(&inputs.into(), out.as_ref()),
        Command::Resolve {
            inputs,
            strategy,
            order,
            registry,
            rounding,
            granularity,
            out,
        } => pipeline::resolve_cases(
            &ResolveArgs {
                rank: inputs.into(),
                strategy,
                order: order.map(|o| o.into_iter().map(ResidentId::from).collect()),
                registry,
                rounding,
                granularity,
            },
            out.as_ref(),
        ),
        Command::Simulate {
            config,
            seed,
            out,
            json,
        } => simulate::simulate(&config, seed, out.as_ref(), json),
        Command::Report { input, out } => report::report(&input, out.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.to_json());
            ExitCode::from(1)
        }
    }
}
