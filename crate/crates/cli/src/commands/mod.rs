//! One function per subcommand, grouped by what they operate on, plus the
//! loading and strategy-parsing helpers they share.

pub mod analyze;
pub mod corpus;
pub mod model;
pub mod select;

use crate::config::RunConfig;
use crate::util::{core_error, core_error_at, run_parallel_ordered, CliError};
use prmv_core::{
    score_candidates, Aggregation, CandidateSet, Scorer, StepScores, Strategy, TrainingInstance,
};
use std::path::Path;

pub(crate) fn load_training(
    path: &Path,
    config: &RunConfig,
) -> Result<Vec<TrainingInstance>, CliError> {
    prmv_core::load_training(path, config.neutral).map_err(core_error_at(path))
}

pub(crate) fn load_candidates(path: &Path) -> Result<Vec<CandidateSet>, CliError> {
    prmv_core::load_candidates(path).map_err(core_error_at(path))
}

/// Parses `--strategy`, letting an explicit `--aggregation` override the
/// aggregation of a `prm` strategy.
pub(crate) fn parse_strategy(
    raw: &str,
    aggregation: Option<&str>,
) -> Result<Strategy, CliError> {
    let strategy: Strategy = raw.parse().map_err(core_error)?;
    match aggregation {
        None => Ok(strategy),
        Some(raw_aggregation) => {
            let aggregation: Aggregation = raw_aggregation.parse().map_err(core_error)?;
            match strategy {
                Strategy::Prm(_) => Ok(Strategy::Prm(aggregation)),
                other => Err(CliError::Validation(format!(
                    "--aggregation only applies to prm strategies, not {other}"
                ))),
            }
        }
    }
}

/// Scores every candidate of every set on the configured worker pool,
/// keeping set order.
pub(crate) fn score_all_sets(
    config: &RunConfig,
    sets: &[CandidateSet],
    scorer: &dyn Scorer,
) -> Result<Vec<Vec<StepScores>>, CliError> {
    run_parallel_ordered(config.jobs, sets, |set| score_candidates(set, scorer))
}
