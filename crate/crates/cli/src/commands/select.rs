//! Scoring and selection commands: `score`, `rank`, `eval`, and `curve`.

use crate::config::{write_sidecar, RunConfig};
use crate::scorer_spec::ScorerSpec;
use crate::util::{
    core_error, core_error_at, create_dir_all, pretty_json, read_to_string, run_parallel_ordered,
    write_file, CliError,
};
use prmv_core::{
    bestofn_curve_scored, candidate_correct, evaluate_sets, score_first_candidates,
    scores_to_jsonl, select_bounded, CandidateSet, Error, EvalReport, FileScorer,
    QuestionOutcome, Scorer, StepScores,
};
use serde::Deserialize;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

#[derive(Debug, clap::Args)]
pub struct ScoreArgs {
    /// Candidate sets to score (JSONL).
    #[arg(long, value_name = "PATH")]
    pub candidates: PathBuf,

    /// Scorer to use, e.g. `mock:7`, `toy:model.json`, `remote:http://host`.
    #[arg(long, value_name = "SPEC")]
    pub scorer: String,

    /// Where to write one score record per candidate (JSONL).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

pub fn score(config: &RunConfig, args: &ScoreArgs) -> Result<(), CliError> {
    let scorer = ScorerSpec::parse(&args.scorer)?.build()?;
    let sets = super::load_candidates(&args.candidates)?;
    let scored = super::score_all_sets(config, &sets, scorer.as_ref())?;
    let mut records = Vec::new();
    for (set, set_scores) in sets.iter().zip(&scored) {
        for (index, scores) in set_scores.iter().enumerate() {
            records.push((set.id.clone(), index, scores.clone()));
        }
    }
    write_file(&args.out, &scores_to_jsonl(&records))?;
    write_sidecar(&args.out, config)
}

#[derive(Debug, clap::Args)]
pub struct RankArgs {
    /// Candidate sets to select from (JSONL).
    #[arg(long, value_name = "PATH")]
    pub candidates: PathBuf,

    /// Replay scores recorded by `score` (JSONL).
    #[arg(long, value_name = "PATH", conflicts_with = "scorer")]
    pub scores: Option<PathBuf>,

    /// Scorer to run instead of replaying recorded scores.
    #[arg(long, value_name = "SPEC")]
    pub scorer: Option<String>,

    /// Selection strategy: baseline, sc, orm, prm, prm-mean, prm-min, or
    /// prm-last.
    #[arg(long, value_name = "NAME")]
    pub strategy: String,

    /// Aggregation for prm strategies: mean, min, or last.
    #[arg(long, value_name = "NAME")]
    pub aggregation: Option<String>,

    /// Where to write one selection record per question (JSONL).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

/// Builds the scorer a score-based strategy asked for, from whichever of
/// `--scores` and `--scorer` was given.
fn resolve_scorer(
    scores: Option<&Path>,
    scorer: Option<&str>,
) -> Result<Box<dyn Scorer>, CliError> {
    match (scores, scorer) {
        (Some(path), None) => Ok(Box::new(
            FileScorer::from_path(path).map_err(core_error_at(path))?,
        )),
        (None, Some(spec)) => ScorerSpec::parse(spec)?.build(),
        (None, None) => Err(CliError::Validation(
            "this strategy needs scores; give --scores or --scorer".into(),
        )),
        (Some(_), Some(_)) => unreachable!("clap rejects --scores with --scorer"),
    }
}

pub fn rank(config: &RunConfig, args: &RankArgs) -> Result<(), CliError> {
    let strategy = super::parse_strategy(&args.strategy, args.aggregation.as_deref())?;
    let sets = super::load_candidates(&args.candidates)?;
    let rules = config.rules();
    let scored: Option<Vec<Vec<StepScores>>> = if strategy.requires_scores() {
        let scorer = resolve_scorer(args.scores.as_deref(), args.scorer.as_deref())?;
        Some(super::score_all_sets(config, &sets, scorer.as_ref())?)
    } else {
        None
    };

    let mut out = String::new();
    for (i, set) in sets.iter().enumerate() {
        let set_scores = scored.as_ref().map(|s| s[i].as_slice());
        let selection = select_bounded(set, set_scores, strategy, &rules, set.candidates.len())
            .map_err(core_error)?;
        let record = serde_json::json!({
            "id": set.id,
            "strategy": strategy.to_string(),
            "chosen_index": selection.chosen_index,
            "chosen_answer": selection.chosen_answer.to_string(),
            "correct": candidate_correct(set, selection.chosen_index, &rules),
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    write_file(&args.out, &out)?;
    write_sidecar(&args.out, config)
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Candidate sets carrying the gold answers (JSONL).
    #[arg(long, value_name = "PATH")]
    pub candidates: PathBuf,

    /// Selection records written by `rank` (JSONL).
    #[arg(long, value_name = "PATH", conflicts_with_all = ["scorer", "strategy"])]
    pub selections: Option<PathBuf>,

    /// Scorer to run when selecting in-process.
    #[arg(long, value_name = "SPEC", requires = "strategy")]
    pub scorer: Option<String>,

    /// Strategy to select with when no selections file is given.
    #[arg(long, value_name = "NAME")]
    pub strategy: Option<String>,

    /// Directory for report.json, report.csv, report.md, and
    /// resolved_config.json.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

/// A line of the selections file. Fields beyond these are ignored.
#[derive(Debug, Deserialize)]
struct SelectionRecord {
    id: String,
    strategy: String,
    chosen_index: usize,
    correct: bool,
}

/// Replays a selections file against the candidate sets, joining by id.
fn outcomes_from_selections(
    sets: &[CandidateSet],
    path: &Path,
) -> Result<(String, usize, Vec<QuestionOutcome>), CliError> {
    let by_id: HashMap<&str, &CandidateSet> =
        sets.iter().map(|set| (set.id.as_str(), set)).collect();
    let text = read_to_string(path)?;
    let mut strategy: Option<String> = None;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut n_candidates = 0;
    let mut outcomes = Vec::new();
    for (line_index, line) in text.lines().enumerate() {
        let line_number = line_index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: SelectionRecord = serde_json::from_str(line).map_err(|e| {
            CliError::Validation(format!("{} line {line_number}: {e}", path.display()))
        })?;
        if let Some(&first) = seen.get(&record.id) {
            return Err(core_error(Error::DuplicateId { id: record.id, line: first }));
        }
        seen.insert(record.id.clone(), line_number);
        match &strategy {
            None => strategy = Some(record.strategy.clone()),
            Some(first) if *first != record.strategy => {
                return Err(CliError::Validation(format!(
                    "{} line {line_number}: mixes strategies {first:?} and {:?}",
                    path.display(),
                    record.strategy
                )));
            }
            Some(_) => {}
        }
        let set = by_id
            .get(record.id.as_str())
            .ok_or_else(|| core_error(Error::MissingGold { id: record.id.clone() }))?;
        if record.chosen_index >= set.candidates.len() {
            return Err(CliError::Validation(format!(
                "{} line {line_number}: chosen_index {} but {:?} has {} candidates",
                path.display(),
                record.chosen_index,
                record.id,
                set.candidates.len()
            )));
        }
        n_candidates = n_candidates.max(set.candidates.len());
        outcomes.push(QuestionOutcome {
            id: record.id,
            language: set.language.clone(),
            chosen_index: record.chosen_index,
            correct: record.correct,
        });
    }
    let strategy =
        strategy.ok_or_else(|| CliError::Validation(format!("{}: no records", path.display())))?;
    Ok((strategy, n_candidates, outcomes))
}

pub fn eval(config: &RunConfig, args: &EvalArgs) -> Result<(), CliError> {
    let sets = super::load_candidates(&args.candidates)?;
    let rules = config.rules();

    let (strategy_name, n_candidates, outcomes) = match (&args.selections, &args.strategy) {
        (Some(path), None) => outcomes_from_selections(&sets, path)?,
        (None, Some(raw)) => {
            let strategy = super::parse_strategy(raw, None)?;
            let scored: Option<Vec<Vec<StepScores>>> = if strategy.requires_scores() {
                let spec = args.scorer.as_deref().ok_or_else(|| {
                    CliError::Validation(format!("strategy {strategy} needs --scorer"))
                })?;
                let scorer = ScorerSpec::parse(spec)?.build()?;
                Some(super::score_all_sets(config, &sets, scorer.as_ref())?)
            } else {
                None
            };
            let outcomes =
                evaluate_sets(&sets, scored.as_deref(), strategy, &rules).map_err(core_error)?;
            let n_candidates = sets.iter().map(|s| s.candidates.len()).max().unwrap_or(0);
            (strategy.to_string(), n_candidates, outcomes)
        }
        _ => {
            return Err(CliError::Validation(
                "give exactly one of --selections or --strategy".into(),
            ));
        }
    };

    let report =
        EvalReport::build(strategy_name, n_candidates, &outcomes).map_err(core_error)?;
    create_dir_all(&args.out_dir)?;
    write_file(&args.out_dir.join("report.json"), &pretty_json(&report.to_json()))?;
    write_file(&args.out_dir.join("report.csv"), &report.to_csv())?;
    write_file(&args.out_dir.join("report.md"), &report.to_markdown())?;
    write_file(
        &args.out_dir.join("resolved_config.json"),
        &pretty_json(&config.to_json()),
    )
}

#[derive(Debug, clap::Args)]
pub struct CurveArgs {
    /// Candidate sets to sweep over (JSONL).
    #[arg(long, value_name = "PATH")]
    pub candidates: PathBuf,

    /// Scorer for score-based strategies.
    #[arg(long, value_name = "SPEC")]
    pub scorer: Option<String>,

    /// Selection strategy to sweep.
    #[arg(long, value_name = "NAME")]
    pub strategy: String,

    /// Comma-separated candidate budgets, strictly increasing, e.g.
    /// `1,2,4,8`.
    #[arg(long, value_name = "LIST")]
    pub ns: String,

    /// Where to write the per-budget rows (CSV); a JSON rendering goes to
    /// the same path with a .json extension.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

fn parse_ns(raw: &str) -> Result<Vec<usize>, CliError> {
    let ns: Vec<usize> = raw
        .split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("bad budget {part:?} in --ns")))
        })
        .collect::<Result<_, _>>()?;
    if ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Validation(
            "--ns budgets must be positive and strictly increasing".into(),
        ));
    }
    Ok(ns)
}

pub fn curve(config: &RunConfig, args: &CurveArgs) -> Result<(), CliError> {
    let strategy = super::parse_strategy(&args.strategy, None)?;
    let ns = parse_ns(&args.ns)?;
    let sets = super::load_candidates(&args.candidates)?;
    let rules = config.rules();

    let scored: Option<Vec<Vec<StepScores>>> = if strategy.requires_scores() {
        let spec = args.scorer.as_deref().ok_or_else(|| {
            CliError::Validation(format!("strategy {strategy} needs --scorer"))
        })?;
        let scorer = ScorerSpec::parse(spec)?.build()?;
        let max_n = *ns.last().expect("parse_ns yields at least one budget");
        Some(run_parallel_ordered(config.jobs, &sets, |set| {
            if set.candidates.len() >= max_n {
                score_first_candidates(set, scorer.as_ref(), max_n)
            } else {
                Ok(Vec::new())
            }
        })?)
    } else {
        None
    };

    let result = bestofn_curve_scored(&sets, scored.as_deref(), strategy, &rules, &ns)
        .map_err(core_error)?;
    write_file(&args.out, &result.to_csv())?;
    write_file(&args.out.with_extension("json"), &pretty_json(&result.to_json()))?;
    write_sidecar(&args.out, config)
}
