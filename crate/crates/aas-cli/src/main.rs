//! `aas` — slice long-horizon robot demonstrations into validated,
//! planner-aligned atomic action segments.
//!
//! Subcommands cover the full pipeline (`run`) and its stages as
//! standalone tools: plan grounding (`plan`), raw boundary proposals
//! (`segment`), proposal validation (`validate`), metric reports
//! (`metrics`), planner-facing exports (`export`), synthetic dataset
//! generation (`synth`), and jitter robustness measurement
//! (`stability`).
//!
//! Exit codes: 0 on success, 1 when `--strict` rejects the data, 2 for
//! bad inputs, bad flags, or I/O failures.

mod commands;
mod config;
mod ioutil;

use clap::{Parser, Subcommand};

use crate::config::CliError;

#[derive(Parser)]
#[command(
    name = "aas",
    version,
    about = "Slice long-horizon robot demonstrations into validated atomic action segments"
)]
struct Cli {
    /// Log at debug level instead of info.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground one plan per task and write plans JSONL
    Plan(commands::plan::PlanCmd),
    /// Full pipeline: plan, propose, validate, score, report, export
    Run(commands::run::RunCmd),
    /// Record raw boundary proposals into a replay store
    Segment(commands::segment::SegmentCmd),
    /// Validate stored proposals without calling a backend
    Validate(commands::validate::ValidateCmd),
    /// Score predictions against references and across runs
    Metrics(commands::metrics::MetricsCmd),
    /// Write the segment manifest, dataset stats, and STRIPS domain
    Export(commands::export::ExportCmd),
    /// Generate a synthetic benchmark dataset with exact ground truth
    Synth(commands::synth::SynthCmd),
    /// Measure boundary agreement between jittered proposal runs
    Stability(commands::stability::StabilityCmd),
}

fn main() {
    let cli = Cli::parse();
    let level = if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Info };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let outcome = match &cli.command {
        Command::Plan(cmd) => commands::plan::run(cmd),
        Command::Run(cmd) => commands::run::run(cmd),
        Command::Segment(cmd) => commands::segment::run(cmd),
        Command::Validate(cmd) => commands::validate::run(cmd),
        Command::Metrics(cmd) => commands::metrics::run(cmd),
        Command::Export(cmd) => commands::export::run(cmd),
        Command::Synth(cmd) => commands::synth::run(cmd),
        Command::Stability(cmd) => commands::stability::run(cmd),
    };

    match outcome {
        Ok(()) => {}
        Err(CliError::Strict(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}
