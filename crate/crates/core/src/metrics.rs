//! Evaluation: per-language accuracy, macro averages over language groups,
//! best-of-N sweeps, and first-error position analysis. All numbers are kept
//! at full precision internally; rounding happens only in the emitters.

use crate::answers::AnswerRules;
use crate::domain::{CandidateSet, StepLabel};
use crate::error::{Error, Result};
use crate::lang::{LanguageCode, Partition, REPORT_LANGUAGE_ORDER};
use crate::scorers::{ScoreRequest, Scorer, StepScores};
use crate::verify::{candidate_correct, select_bounded, Selection, Strategy};
use serde::Serialize;
use std::collections::BTreeMap;

/// The unit of evaluation: one question, the candidate that selection chose,
/// and whether its answer matched gold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionOutcome {
    pub id: String,
    pub language: LanguageCode,
    pub chosen_index: usize,
    pub correct: bool,
}

/// Accuracy for one language, as a percentage in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LanguageAccuracy {
    pub questions: usize,
    pub accuracy_pct: f64,
}

/// Groups outcomes by language. Accuracy is percent correct.
pub fn accuracy(outcomes: &[QuestionOutcome]) -> BTreeMap<LanguageCode, LanguageAccuracy> {
    let mut counts: BTreeMap<LanguageCode, (usize, usize)> = BTreeMap::new();
    for outcome in outcomes {
        let entry = counts.entry(outcome.language.clone()).or_insert((0, 0));
        entry.0 += 1;
        entry.1 += usize::from(outcome.correct);
    }
    counts
        .into_iter()
        .map(|(language, (questions, correct))| {
            (
                language,
                LanguageAccuracy {
                    questions,
                    accuracy_pct: 100.0 * correct as f64 / questions as f64,
                },
            )
        })
        .collect()
}

/// Unweighted means of per-language accuracy. `mu_all` averages every
/// language present, including ones outside both groups; the group means are
/// `None` when no language of that group is present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacroAverages {
    pub mu_all: f64,
    pub mu_seen: Option<f64>,
    pub mu_unseen: Option<f64>,
}

impl MacroAverages {
    pub fn from_per_language(
        per_language: &BTreeMap<LanguageCode, LanguageAccuracy>,
    ) -> Result<MacroAverages> {
        if per_language.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mean_of = |partition: Option<Partition>| -> Option<f64> {
            let values: Vec<f64> = per_language
                .iter()
                .filter(|(language, _)| {
                    partition.map_or(true, |p| language.partition() == p)
                })
                .map(|(_, a)| a.accuracy_pct)
                .collect();
            (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
        };
        Ok(MacroAverages {
            mu_all: mean_of(None).expect("non-empty map"),
            mu_seen: mean_of(Some(Partition::Seen)),
            mu_unseen: mean_of(Some(Partition::Unseen)),
        })
    }
}

/// One evaluation: a strategy, the candidate budget, and accuracy by
/// language.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub strategy: String,
    pub n_candidates: usize,
    pub per_language: BTreeMap<LanguageCode, LanguageAccuracy>,
    pub macros: MacroAverages,
}

fn round1(value: f64) -> f64 {
    (value * 10.0).round() / 10.0
}

/// Languages of `per_language` in report order: the canonical languages
/// first, then anything else sorted by code.
fn ordered_languages(
    per_language: &BTreeMap<LanguageCode, LanguageAccuracy>,
) -> Vec<&LanguageCode> {
    let mut ordered: Vec<&LanguageCode> = Vec::with_capacity(per_language.len());
    for code in REPORT_LANGUAGE_ORDER {
        if let Some((language, _)) = per_language.get_key_value(&LanguageCode::new(code)) {
            ordered.push(language);
        }
    }
    for language in per_language.keys() {
        if !REPORT_LANGUAGE_ORDER.contains(&language.code()) {
            ordered.push(language);
        }
    }
    ordered
}

impl EvalReport {
    pub fn build(
        strategy: impl Into<String>,
        n_candidates: usize,
        outcomes: &[QuestionOutcome],
    ) -> Result<EvalReport> {
        let per_language = accuracy(outcomes);
        let macros = MacroAverages::from_per_language(&per_language)?;
        Ok(EvalReport {
            strategy: strategy.into(),
            n_candidates,
            per_language,
            macros,
        })
    }

    pub fn total_questions(&self) -> usize {
        self.per_language.values().map(|a| a.questions).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let per_language: serde_json::Map<String, serde_json::Value> =
            ordered_languages(&self.per_language)
                .into_iter()
                .map(|language| {
                    let entry = &self.per_language[language];
                    (
                        language.code().to_string(),
                        serde_json::json!({
                            "questions": entry.questions,
                            "accuracy_pct": round1(entry.accuracy_pct),
                        }),
                    )
                })
                .collect();
        serde_json::json!({
            "strategy": self.strategy,
            "n_candidates": self.n_candidates,
            "per_language": per_language,
            "mu_all": round1(self.macros.mu_all),
            "mu_seen": self.macros.mu_seen.map(round1),
            "mu_unseen": self.macros.mu_unseen.map(round1),
        })
    }

    /// One row per language in report order, then one row per macro average.
    /// The macro rows carry the number of contributing languages in the
    /// `questions` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("language,questions,accuracy_pct\n");
        for language in ordered_languages(&self.per_language) {
            let entry = &self.per_language[language];
            out.push_str(&format!(
                "{},{},{:.1}\n",
                language.code(),
                entry.questions,
                entry.accuracy_pct
            ));
        }
        let group_size = |partition: Option<Partition>| {
            self.per_language
                .keys()
                .filter(|l| partition.map_or(true, |p| l.partition() == p))
                .count()
        };
        out.push_str(&format!(
            "mu_all,{},{:.1}\n",
            group_size(None),
            self.macros.mu_all
        ));
        if let Some(mu_seen) = self.macros.mu_seen {
            out.push_str(&format!(
                "mu_seen,{},{:.1}\n",
                group_size(Some(Partition::Seen)),
                mu_seen
            ));
        }
        if let Some(mu_unseen) = self.macros.mu_unseen {
            out.push_str(&format!(
                "mu_unseen,{},{:.1}\n",
                group_size(Some(Partition::Unseen)),
                mu_unseen
            ));
        }
        out
    }

    /// Single-row pipe table: macro columns first, then per-language
    /// columns. Absent macro averages render as `-`.
    pub fn to_markdown(&self) -> String {
        let languages = ordered_languages(&self.per_language);
        let mut header = String::from("| strategy | N | μ_all | μ_seen | μ_unseen |");
        let mut rule = String::from("| --- | --- | --- | --- | --- |");
        let mut row = format!(
            "| {} | {} | {:.1} | {} | {} |",
            self.strategy,
            self.n_candidates,
            self.macros.mu_all,
            self.macros
                .mu_seen
                .map_or_else(|| "-".to_string(), |v| format!("{v:.1}")),
            self.macros
                .mu_unseen
                .map_or_else(|| "-".to_string(), |v| format!("{v:.1}")),
        );
        for language in &languages {
            header.push_str(&format!(" {} |", language.code()));
            rule.push_str(" --- |");
            row.push_str(&format!(" {:.1} |", self.per_language[*language].accuracy_pct));
        }
        format!("{header}\n{rule}\n{row}\n")
    }
}

/// Builds the outcome record for one selection.
pub fn outcome_for(set: &CandidateSet, selection: &Selection, rules: &AnswerRules) -> QuestionOutcome {
    QuestionOutcome {
        id: set.id.clone(),
        language: set.language.clone(),
        chosen_index: selection.chosen_index,
        correct: candidate_correct(set, selection.chosen_index, rules),
    }
}

/// Scores every candidate of a set, in candidate order.
pub fn score_candidates(set: &CandidateSet, scorer: &dyn Scorer) -> Result<Vec<StepScores>> {
    score_first_candidates(set, scorer, set.candidates.len())
}

/// Scores the first `limit` candidates of a set.
pub fn score_first_candidates(
    set: &CandidateSet,
    scorer: &dyn Scorer,
    limit: usize,
) -> Result<Vec<StepScores>> {
    set.candidates
        .iter()
        .take(limit)
        .enumerate()
        .map(|(index, candidate)| {
            let steps = candidate.step_texts();
            scorer.score(&ScoreRequest {
                id: &set.id,
                candidate_index: index,
                question: &set.question,
                steps: &steps,
                language: &set.language,
            })
        })
        .collect()
}

/// Selects over every set and returns the outcomes in set order. When
/// `scores` is given it must hold one score list per set.
pub fn evaluate_sets(
    sets: &[CandidateSet],
    scores: Option<&[Vec<StepScores>]>,
    strategy: Strategy,
    rules: &AnswerRules,
) -> Result<Vec<QuestionOutcome>> {
    if let Some(scores) = scores {
        if scores.len() != sets.len() {
            return Err(Error::LengthMismatch { expected: sets.len(), actual: scores.len() });
        }
    }
    sets.iter()
        .enumerate()
        .map(|(i, set)| {
            let set_scores = scores.map(|s| s[i].as_slice());
            let selection = select_bounded(set, set_scores, strategy, rules, set.candidates.len())?;
            Ok(outcome_for(set, &selection, rules))
        })
        .collect()
}

/// Reports for each candidate budget of a best-of-N sweep, plus how many
/// sets were too small to participate at the largest budget.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveResult {
    pub reports: BTreeMap<usize, EvalReport>,
    pub skipped: usize,
}

impl CurveResult {
    pub fn to_json(&self) -> serde_json::Value {
        let reports: Vec<serde_json::Value> = self
            .reports
            .iter()
            .map(|(n, report)| {
                let mut value = report.to_json();
                value["n"] = serde_json::json!(n);
                value
            })
            .collect();
        serde_json::json!({ "skipped": self.skipped, "reports": reports })
    }

    /// Per-language rows of every report, prefixed with the budget column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,language,questions,accuracy_pct\n");
        for (n, report) in &self.reports {
            for line in report.to_csv().lines().skip(1) {
                out.push_str(&format!("{n},{line}\n"));
            }
        }
        out
    }
}

fn validate_ns(ns: &[usize]) -> Result<()> {
    if ns.is_empty() {
        return Err(Error::bad_parameter("ns", "at least one budget required"));
    }
    if ns[0] == 0 {
        return Err(Error::bad_parameter("ns", "budgets start at 1"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::bad_parameter("ns", "budgets must be strictly increasing"));
    }
    Ok(())
}

/// Best-of-N sweep from precomputed scores. Sets with fewer candidates than
/// the largest budget are skipped entirely, so every budget is evaluated
/// over the same question population. `scores` must align with `sets` when
/// present and is required for score-based strategies.
pub fn bestofn_curve_scored(
    sets: &[CandidateSet],
    scores: Option<&[Vec<StepScores>]>,
    strategy: Strategy,
    rules: &AnswerRules,
    ns: &[usize],
) -> Result<CurveResult> {
    validate_ns(ns)?;
    if strategy.requires_scores() && scores.is_none() {
        return Err(Error::NoAggregation { strategy: strategy.to_string() });
    }
    if let Some(scores) = scores {
        if scores.len() != sets.len() {
            return Err(Error::LengthMismatch { expected: sets.len(), actual: scores.len() });
        }
    }
    let max_n = *ns.last().unwrap();
    let eligible: Vec<usize> = (0..sets.len())
        .filter(|&i| sets[i].candidates.len() >= max_n)
        .collect();
    let skipped = sets.len() - eligible.len();
    if eligible.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut reports = BTreeMap::new();
    for &n in ns {
        let mut outcomes = Vec::with_capacity(eligible.len());
        for &i in &eligible {
            let set_scores = scores.map(|s| s[i].as_slice());
            let selection = select_bounded(&sets[i], set_scores, strategy, rules, n)?;
            outcomes.push(outcome_for(&sets[i], &selection, rules));
        }
        reports.insert(n, EvalReport::build(strategy.to_string(), n, &outcomes)?);
    }
    Ok(CurveResult { reports, skipped })
}

/// Best-of-N sweep that scores candidates on demand. Each eligible set is
/// scored once, up to the largest budget, and the scores are reused across
/// budgets.
pub fn bestofn_curve(
    sets: &[CandidateSet],
    scorer: Option<&dyn Scorer>,
    strategy: Strategy,
    rules: &AnswerRules,
    ns: &[usize],
) -> Result<CurveResult> {
    validate_ns(ns)?;
    let scores = if strategy.requires_scores() {
        let scorer = scorer.ok_or_else(|| Error::NoAggregation {
            strategy: strategy.to_string(),
        })?;
        let max_n = *ns.last().unwrap();
        let mut all = Vec::with_capacity(sets.len());
        for set in sets {
            if set.candidates.len() >= max_n {
                all.push(score_first_candidates(set, scorer, max_n)?);
            } else {
                all.push(Vec::new());
            }
        }
        Some(all)
    } else {
        None
    };
    bestofn_curve_scored(sets, scores.as_deref(), strategy, rules, ns)
}

/// First-error buckets over 1-based step positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorBucket {
    /// Positions 1 through 5.
    Early,
    /// Positions 6 through 10.
    Middle,
    /// Positions 11 through 15.
    Later,
    /// Positions beyond 15.
    Beyond,
}

impl ErrorBucket {
    pub fn from_position(position: usize) -> ErrorBucket {
        match position {
            0 => unreachable!("positions are 1-based"),
            1..=5 => ErrorBucket::Early,
            6..=10 => ErrorBucket::Middle,
            11..=15 => ErrorBucket::Later,
            _ => ErrorBucket::Beyond,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorBucket::Early => "early",
            ErrorBucket::Middle => "middle",
            ErrorBucket::Later => "later",
            ErrorBucket::Beyond => "beyond",
        }
    }
}

/// One labeled, scored solution to analyze.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorItem {
    pub id: String,
    pub language: LanguageCode,
    pub step_scores: Vec<f64>,
    pub labels: Vec<StepLabel>,
}

/// Where the scorer first disagreed with the annotation for one solution.
/// `position` is 1-based; `None` means scorer and annotation agree on every
/// step, which excludes the solution from the histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstErrorRecord {
    pub id: String,
    pub position: Option<usize>,
    pub bucket: Option<ErrorBucket>,
}

/// Bucket counts plus the number of fully-agreeing solutions excluded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ErrorHistogram {
    pub early: usize,
    pub middle: usize,
    pub later: usize,
    pub beyond: usize,
    pub excluded: usize,
}

impl ErrorHistogram {
    pub fn count(&self, bucket: ErrorBucket) -> usize {
        match bucket {
            ErrorBucket::Early => self.early,
            ErrorBucket::Middle => self.middle,
            ErrorBucket::Later => self.later,
            ErrorBucket::Beyond => self.beyond,
        }
    }

    fn counted(&self) -> usize {
        self.early + self.middle + self.later + self.beyond
    }

    /// Share of counted (non-excluded) solutions in this bucket.
    pub fn percent(&self, bucket: ErrorBucket) -> f64 {
        let counted = self.counted();
        if counted == 0 {
            return 0.0;
        }
        100.0 * self.count(bucket) as f64 / counted as f64
    }

    /// Bucket rows with percentages over counted solutions; the excluded row
    /// has no percentage.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bucket,count,percent\n");
        for bucket in [ErrorBucket::Early, ErrorBucket::Middle, ErrorBucket::Later, ErrorBucket::Beyond]
        {
            out.push_str(&format!(
                "{},{},{:.1}\n",
                bucket.name(),
                self.count(bucket),
                self.percent(bucket)
            ));
        }
        out.push_str(&format!("excluded,{},\n", self.excluded));
        out
    }
}

/// Finds, per solution, the first step where the thresholded score disagrees
/// with the annotated label, and buckets those 1-based positions. A score of
/// exactly `theta` counts as predicting correct.
pub fn first_error_analysis(
    items: &[ErrorItem],
    theta: f64,
) -> Result<(Vec<FirstErrorRecord>, ErrorHistogram)> {
    if !(theta.is_finite() && (0.0..=1.0).contains(&theta)) {
        return Err(Error::bad_parameter("theta", "must be in [0, 1]"));
    }
    let mut records = Vec::with_capacity(items.len());
    let mut histogram = ErrorHistogram::default();
    for item in items {
        if item.step_scores.len() != item.labels.len() {
            return Err(Error::LengthMismatch {
                expected: item.labels.len(),
                actual: item.step_scores.len(),
            });
        }
        if item.labels.is_empty() {
            return Err(Error::EmptyInput);
        }
        let position = item
            .step_scores
            .iter()
            .zip(&item.labels)
            .position(|(&score, &label)| (score >= theta) != (label == StepLabel::Correct))
            .map(|index| index + 1);
        let bucket = position.map(ErrorBucket::from_position);
        match bucket {
            Some(ErrorBucket::Early) => histogram.early += 1,
            Some(ErrorBucket::Middle) => histogram.middle += 1,
            Some(ErrorBucket::Later) => histogram.later += 1,
            Some(ErrorBucket::Beyond) => histogram.beyond += 1,
            None => histogram.excluded += 1,
        }
        records.push(FirstErrorRecord { id: item.id.clone(), position, bucket });
    }
    Ok((records, histogram))
}

/// Serializes first-error records to JSONL in input order.
pub fn error_records_to_jsonl(records: &[FirstErrorRecord]) -> String {
    let mut out = String::new();
    for record in records {
        let value = serde_json::json!({
            "id": record.id,
            "position": record.position,
            "bucket": record.bucket.map(|b| b.name()),
        });
        out.push_str(&value.to_string());
        out.push('\n');
    }
    out
}
