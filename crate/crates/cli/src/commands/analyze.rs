//! Analysis commands: `errors` and `emit-rewards`.

use crate::config::{write_sidecar, RunConfig};
use crate::scorer_spec::ScorerSpec;
use crate::util::{
    core_error, core_error_at, read_to_string, run_parallel_ordered, write_file, CliError,
};
use prmv_core::{
    classify_language, error_records_to_jsonl, first_error_analysis, Error, ErrorItem,
    FileScorer, ScoreRequest, Scorer, SegmentMode, StepLabel,
};
use regex::Regex;
use serde::Deserialize;
use std::collections::HashMap;
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct ErrorsArgs {
    /// Step scores recorded by `score` (JSONL); entries with candidate
    /// index 0 are matched to the gold corpus by id.
    #[arg(long, value_name = "PATH")]
    pub scores: PathBuf,

    /// Step-labeled gold corpus (JSONL).
    #[arg(long, value_name = "PATH")]
    pub gold: PathBuf,

    /// Disagreement threshold in [0, 1].
    #[arg(long, value_name = "F")]
    pub theta: Option<f64>,

    /// Where to write one first-error record per solution (JSONL).
    #[arg(long, value_name = "PATH")]
    pub out_records: PathBuf,

    /// Where to write the position histogram (CSV).
    #[arg(long, value_name = "PATH")]
    pub out_histogram: PathBuf,
}

pub fn errors(config: &RunConfig, args: &ErrorsArgs) -> Result<(), CliError> {
    let gold = super::load_training(&args.gold, config)?;
    let scorer = FileScorer::from_path(&args.scores).map_err(core_error_at(&args.scores))?;
    let items = run_parallel_ordered(config.jobs, &gold, |instance| {
        let steps = instance.solution.step_texts();
        let scores = scorer.score(&ScoreRequest {
            id: &instance.id,
            candidate_index: 0,
            question: &instance.question,
            steps: &steps,
            language: &instance.language,
        })?;
        let labels: Vec<StepLabel> = instance
            .solution
            .steps
            .iter()
            .map(|step| {
                step.label.ok_or_else(|| Error::UnlabeledStep {
                    id: instance.id.clone(),
                    step_index: step.index,
                })
            })
            .collect::<prmv_core::Result<_>>()?;
        Ok(ErrorItem {
            id: instance.id.clone(),
            language: instance.language.clone(),
            step_scores: scores.step_scores,
            labels,
        })
    })?;
    let (records, histogram) = first_error_analysis(&items, config.theta).map_err(core_error)?;
    write_file(&args.out_records, &error_records_to_jsonl(&records))?;
    write_file(&args.out_histogram, &histogram.to_csv())?;
    write_sidecar(&args.out_records, config)
}

#[derive(Debug, clap::Args)]
pub struct EmitRewardsArgs {
    /// Generations to reward, one JSON object per line with id, language,
    /// question, and response fields.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Scorer that rates the steps.
    #[arg(long, value_name = "SPEC")]
    pub scorer: String,

    /// How to find step boundaries: step-markers or blank-line.
    #[arg(long, value_name = "MODE", default_value = "step-markers")]
    pub mode: String,

    /// Custom step-header pattern; overrides --mode. Group 1, when present,
    /// must capture the step number.
    #[arg(long, value_name = "REGEX")]
    pub step_pattern: Option<String>,

    /// Multiply every reward by this factor.
    #[arg(long, value_name = "F", default_value_t = 1.0, allow_negative_numbers = true)]
    pub reward_scale: f64,

    /// Add this to every reward after scaling.
    #[arg(long, value_name = "F", default_value_t = 0.0, allow_negative_numbers = true)]
    pub reward_shift: f64,

    /// Where to write one reward stream per generation (JSONL).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

/// A line of the generations file.
#[derive(Debug, Deserialize)]
struct GenerationRecord {
    id: String,
    language: String,
    question: String,
    response: String,
}

fn parse_mode(raw: &str) -> Result<SegmentMode, CliError> {
    match raw {
        "step-markers" => Ok(SegmentMode::StepMarkers),
        "blank-line" => Ok(SegmentMode::BlankLine),
        other => Err(CliError::Validation(format!(
            "unknown segmentation mode {other:?}, expected step-markers or blank-line"
        ))),
    }
}

fn load_generations(args: &EmitRewardsArgs) -> Result<Vec<GenerationRecord>, CliError> {
    let text = read_to_string(&args.input)?;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut records = Vec::new();
    for (line_index, line) in text.lines().enumerate() {
        let line_number = line_index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: GenerationRecord = serde_json::from_str(line).map_err(|e| {
            CliError::Validation(format!("{} line {line_number}: {e}", args.input.display()))
        })?;
        if let Some(&first) = seen.get(&record.id) {
            return Err(core_error(Error::DuplicateId { id: record.id, line: first }));
        }
        seen.insert(record.id.clone(), line_number);
        records.push(record);
    }
    Ok(records)
}

pub fn emit_rewards(config: &RunConfig, args: &EmitRewardsArgs) -> Result<(), CliError> {
    let mode = parse_mode(&args.mode)?;
    let pattern = args
        .step_pattern
        .as_deref()
        .map(Regex::new)
        .transpose()
        .map_err(|e| CliError::Validation(format!("bad --step-pattern: {e}")))?;
    let scorer = ScorerSpec::parse(&args.scorer)?.build()?;
    let records = load_generations(args)?;

    let streams = run_parallel_ordered(config.jobs, &records, |record| {
        let language = classify_language(&record.language);
        let stream = match &pattern {
            Some(header) => prmv_core::emit_rewards_with_pattern(
                &record.id,
                &record.question,
                &record.response,
                header,
                scorer.as_ref(),
                &language,
            ),
            None => prmv_core::emit_rewards(
                &record.id,
                &record.question,
                &record.response,
                mode,
                scorer.as_ref(),
                &language,
            ),
        }?;
        Ok(stream.scaled(args.reward_scale, args.reward_shift))
    })?;

    let mut out = String::new();
    for stream in &streams {
        out.push_str(&stream.to_json().to_string());
        out.push('\n');
    }
    write_file(&args.out, &out)?;
    write_sidecar(&args.out, config)
}
