//! `prmv`: verification of multi-step math solutions from the command line.
//!
//! Every command reads and writes plain files (JSONL in, JSONL/JSON/CSV
//! out), holds no hidden state, and seeds all randomness explicitly, so
//! reruns produce byte-identical outputs. Exit codes: 0 on success, 1 for
//! validation failures, 2 for I/O failures.

mod commands;
mod config;
mod scorer_spec;
mod util;

use clap::error::ErrorKind;
use clap::Parser;
use commands::{analyze, corpus, model, select};
use config::GlobalArgs;
use std::process::ExitCode;
use util::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "prmv",
    version,
    about = "Step-level verification and best-of-N selection for math solutions"
)]
struct Cli {
    #[command(flatten)]
    globals: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Keep only translations whose math tokens match their source.
    Filter(corpus::FilterArgs),
    /// Summarize the step counts of a labeled corpus.
    Stats(corpus::StatsArgs),
    /// Sample a seeded multilingual training mixture from per-language pools.
    Mixture(corpus::MixtureArgs),
    /// Train the hashed-feature step scorer.
    TrainToy(model::TrainToyArgs),
    /// Check a saved model's analytic gradients against finite differences.
    Gradcheck(model::GradcheckArgs),
    /// Score every candidate solution step by step.
    Score(select::ScoreArgs),
    /// Choose one candidate per question with a selection strategy.
    Rank(select::RankArgs),
    /// Build per-language accuracy reports with macro averages.
    Eval(select::EvalArgs),
    /// Sweep accuracy over growing candidate budgets.
    Curve(select::CurveArgs),
    /// Locate the first scorer/annotation disagreement per solution.
    Errors(analyze::ErrorsArgs),
    /// Emit per-step reward events for generated solutions.
    EmitRewards(analyze::EmitRewardsArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let theta = match &cli.command {
        Command::Errors(args) => args.theta,
        _ => None,
    };
    let config = config::resolve(&cli.globals, theta)?;
    match &cli.command {
        Command::Filter(args) => corpus::filter(&config, args),
        Command::Stats(args) => corpus::stats(&config, args),
        Command::Mixture(args) => corpus::mixture(&config, args),
        Command::TrainToy(args) => model::train_toy(&config, args),
        Command::Gradcheck(args) => model::gradcheck(&config, args),
        Command::Score(args) => select::score(&config, args),
        Command::Rank(args) => select::rank(&config, args),
        Command::Eval(args) => select::eval(&config, args),
        Command::Curve(args) => select::curve(&config, args),
        Command::Errors(args) => analyze::errors(&config, args),
        Command::EmitRewards(args) => analyze::emit_rewards(&config, args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            let _ = error.print();
            return match error.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {}", error.message());
            ExitCode::from(error.exit_code())
        }
    }
}
