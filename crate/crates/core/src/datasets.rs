//! Corpus handling: JSONL loading with line-precise validation, math-token
//! extraction, the translation consistency filter, dataset statistics, and
//! seeded mixture construction.

use crate::answers::{parse_number, AnswerRules};
use crate::domain::{CandidateSet, Solution, Source, Step, StepLabel, TrainingInstance};
use crate::error::{Error, Result};
use crate::lang::classify_language;
use num::{BigInt, BigRational};
use once_cell::sync::Lazy;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

/// Schema version accepted by the loaders. Records may carry an explicit
/// `schema_version` field; when present it must match.
pub const TRAINING_SCHEMA_VERSION: u32 = 1;

/// How to fold the neutral step label (`0`) into the binary labels at
/// ingestion. Treating neutral as correct is the default: a neutral step is
/// one that makes no progress without being wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeutralPolicy {
    #[default]
    Correct,
    Incorrect,
}

impl NeutralPolicy {
    fn label(self) -> StepLabel {
        match self {
            NeutralPolicy::Correct => StepLabel::Correct,
            NeutralPolicy::Incorrect => StepLabel::Incorrect,
        }
    }
}

#[derive(Deserialize)]
struct RawTrainingRecord {
    id: String,
    language: String,
    question: String,
    steps: Vec<RawStep>,
    answer: String,
    source: String,
    #[serde(default)]
    schema_version: Option<u32>,
}

#[derive(Deserialize)]
struct RawStep {
    text: String,
    label: i64,
}

/// Loads a training corpus from JSONL, one instance per line. Labels use the
/// three-valued encoding `1` / `0` / `-1`; `neutral` decides where `0` goes.
/// Blank lines are skipped. Every schema problem reports its 1-based line.
pub fn load_training(path: impl AsRef<Path>, neutral: NeutralPolicy) -> Result<Vec<TrainingInstance>> {
    let reader = BufReader::new(File::open(path)?);
    let mut instances = Vec::new();
    let mut seen_ids: HashMap<String, usize> = HashMap::new();
    for (line_index, line) in reader.lines().enumerate() {
        let line_number = line_index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawTrainingRecord = serde_json::from_str(&line)
            .map_err(|e| Error::schema(line_number, "record", e.to_string()))?;
        if let Some(version) = raw.schema_version {
            if version != TRAINING_SCHEMA_VERSION {
                return Err(Error::schema(
                    line_number,
                    "schema_version",
                    format!("unsupported version {version}"),
                ));
            }
        }
        if raw.id.is_empty() {
            return Err(Error::schema(line_number, "id", "empty id"));
        }
        if let Some(&first) = seen_ids.get(&raw.id) {
            return Err(Error::DuplicateId { id: raw.id, line: first });
        }
        seen_ids.insert(raw.id.clone(), line_number);
        if raw.steps.is_empty() {
            return Err(Error::schema(line_number, "steps", "no steps"));
        }
        let mut steps = Vec::with_capacity(raw.steps.len());
        for (i, raw_step) in raw.steps.into_iter().enumerate() {
            if raw_step.text.trim().is_empty() {
                return Err(Error::schema(
                    line_number,
                    &format!("steps[{i}].text"),
                    "blank step text",
                ));
            }
            let label = match raw_step.label {
                1 => StepLabel::Correct,
                -1 => StepLabel::Incorrect,
                0 => neutral.label(),
                other => {
                    return Err(Error::schema(
                        line_number,
                        &format!("steps[{i}].label"),
                        format!("expected 1, 0, or -1, got {other}"),
                    ))
                }
            };
            steps.push(Step::labeled(i, raw_step.text, label));
        }
        instances.push(TrainingInstance {
            id: raw.id,
            language: classify_language(&raw.language),
            question: raw.question,
            solution: Solution::new(steps, raw.answer),
            source: Source::parse(&raw.source),
        });
    }
    Ok(instances)
}

/// Serializes training instances back to JSONL with binary labels
/// (`1` correct, `0` incorrect). Field order within a record is alphabetical
/// and stable, so equal inputs produce byte-equal output.
pub fn training_to_jsonl(instances: &[TrainingInstance]) -> String {
    let mut out = String::new();
    for instance in instances {
        let steps: Vec<serde_json::Value> = instance
            .solution
            .steps
            .iter()
            .map(|s| {
                serde_json::json!({
                    "text": s.text,
                    "label": match s.label {
                        Some(StepLabel::Correct) => 1,
                        _ => 0,
                    },
                })
            })
            .collect();
        let source = match instance.source {
            Source::Prm800k => "PRM800K",
            Source::MathShepherd => "MathShepherd",
            Source::Other => "Other",
        };
        let record = serde_json::json!({
            "id": instance.id,
            "language": instance.language.code(),
            "question": instance.question,
            "steps": steps,
            "answer": instance.solution.answer_raw,
            "source": source,
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct RawCandidateSet {
    id: String,
    language: String,
    question: String,
    gold_answer: String,
    candidates: Vec<RawCandidate>,
    #[serde(default)]
    schema_version: Option<u32>,
}

#[derive(Deserialize)]
struct RawCandidate {
    steps: Vec<String>,
    answer_raw: String,
}

/// Loads candidate sets from JSONL, one set per line. Candidate steps are
/// unlabeled.
pub fn load_candidates(path: impl AsRef<Path>) -> Result<Vec<CandidateSet>> {
    let reader = BufReader::new(File::open(path)?);
    let mut sets = Vec::new();
    let mut seen_ids: HashMap<String, usize> = HashMap::new();
    for (line_index, line) in reader.lines().enumerate() {
        let line_number = line_index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawCandidateSet = serde_json::from_str(&line)
            .map_err(|e| Error::schema(line_number, "record", e.to_string()))?;
        if let Some(version) = raw.schema_version {
            if version != TRAINING_SCHEMA_VERSION {
                return Err(Error::schema(
                    line_number,
                    "schema_version",
                    format!("unsupported version {version}"),
                ));
            }
        }
        if raw.id.is_empty() {
            return Err(Error::schema(line_number, "id", "empty id"));
        }
        if let Some(&first) = seen_ids.get(&raw.id) {
            return Err(Error::DuplicateId { id: raw.id, line: first });
        }
        seen_ids.insert(raw.id.clone(), line_number);
        if raw.candidates.is_empty() {
            return Err(Error::schema(line_number, "candidates", "no candidates"));
        }
        let mut candidates = Vec::with_capacity(raw.candidates.len());
        for (c, raw_candidate) in raw.candidates.into_iter().enumerate() {
            if raw_candidate.steps.is_empty() {
                return Err(Error::schema(
                    line_number,
                    &format!("candidates[{c}].steps"),
                    "no steps",
                ));
            }
            let mut steps = Vec::with_capacity(raw_candidate.steps.len());
            for (i, text) in raw_candidate.steps.into_iter().enumerate() {
                if text.trim().is_empty() {
                    return Err(Error::schema(
                        line_number,
                        &format!("candidates[{c}].steps[{i}]"),
                        "blank step text",
                    ));
                }
                steps.push(Step::new(i, text));
            }
            candidates.push(Solution::new(steps, raw_candidate.answer_raw));
        }
        sets.push(CandidateSet {
            id: raw.id,
            language: classify_language(&raw.language),
            question: raw.question,
            gold_answer: raw.gold_answer,
            candidates,
        });
    }
    Ok(sets)
}

/// Multisets of the mathematical content of a text: every number as an exact
/// rational, and every equation as a whitespace-free string.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MathTokens {
    pub numbers: BTreeMap<BigRational, usize>,
    pub equations: BTreeMap<String, usize>,
}

static NUMBER_RUN: Lazy<Regex> = Lazy::new(|| Regex::new(r"\d[\d.,]*").unwrap());
static DIGIT_RUN: Lazy<Regex> = Lazy::new(|| Regex::new(r"\d+").unwrap());

/// Extracts number and equation multisets from free text.
///
/// Numbers are maximal digit-and-separator runs parsed under the given
/// decimal convention; a run that fails to parse (e.g. `1.2.3`) falls back to
/// its individual digit runs so that every digit in the text is accounted
/// for. Signs are not part of number tokens. Numbers inside equations are
/// counted too.
///
/// Equations are maximal `<expr> = <expr>` substrings over digits, ASCII
/// letters, and the operators `+-*/^()=<>.`, stored with whitespace removed.
/// Whitespace joins operands to operators but separates two adjacent atoms,
/// so prose words next to an equation are not absorbed into it.
pub fn extract_math_tokens(text: &str, decimal_comma: bool) -> MathTokens {
    let mut tokens = MathTokens::default();
    for m in NUMBER_RUN.find_iter(text) {
        let run = m.as_str().trim_end_matches(['.', ',']);
        if run.is_empty() {
            continue;
        }
        match parse_number(run, decimal_comma) {
            Some(value) => *tokens.numbers.entry(value).or_insert(0) += 1,
            None => {
                for digits in DIGIT_RUN.find_iter(run) {
                    let value =
                        BigRational::from_integer(digits.as_str().parse::<BigInt>().expect("digits"));
                    *tokens.numbers.entry(value).or_insert(0) += 1;
                }
            }
        }
    }
    scan_equations(text, &mut tokens.equations);
    tokens
}

#[derive(Clone, Copy, PartialEq)]
enum EqKind {
    None,
    Atom,
    Op,
    RParen,
    LParen,
}

fn scan_equations(text: &str, out: &mut BTreeMap<String, usize>) {
    let mut candidate = String::new();
    let mut last = EqKind::None;
    let mut pending_ws = false;

    fn close(candidate: &mut String, out: &mut BTreeMap<String, usize>) {
        let cleaned = candidate.trim_end_matches('.');
        if cleaned.contains('=') && cleaned.split('=').all(|part| !part.is_empty()) {
            *out.entry(cleaned.to_string()).or_insert(0) += 1;
        }
        candidate.clear();
    }

    for c in text.chars() {
        match c {
            ' ' | '\t' => {
                pending_ws = true;
            }
            c if c.is_ascii_alphanumeric() || c == '.' => {
                if pending_ws && matches!(last, EqKind::Atom | EqKind::RParen) {
                    close(&mut candidate, out);
                }
                candidate.push(c);
                last = EqKind::Atom;
                pending_ws = false;
            }
            '+' | '-' | '*' | '/' | '^' | '=' | '<' | '>' => {
                candidate.push(c);
                last = EqKind::Op;
                pending_ws = false;
            }
            '(' => {
                if pending_ws && matches!(last, EqKind::Atom | EqKind::RParen) {
                    close(&mut candidate, out);
                }
                candidate.push(c);
                last = EqKind::LParen;
                pending_ws = false;
            }
            ')' => {
                candidate.push(c);
                last = EqKind::RParen;
                pending_ws = false;
            }
            _ => {
                close(&mut candidate, out);
                last = EqKind::None;
                pending_ws = false;
            }
        }
    }
    close(&mut candidate, out);
}

/// Outcome of the consistency filter for one source/translation pair. The
/// checks run in a fixed order and the first failure wins: step parity, then
/// numbers, then equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterDecision {
    Keep,
    RejectStepParity,
    RejectNumbers,
    RejectEquations,
}

/// Compares a translated instance against its source. Both sides are parsed
/// under the same `decimal_comma` convention; [`filter_corpus`] resolves that
/// flag from the translation's language.
pub fn consistency_filter(
    source: &TrainingInstance,
    translation: &TrainingInstance,
    decimal_comma: bool,
) -> Result<FilterDecision> {
    if source.id != translation.id {
        return Err(Error::IdMismatch {
            source_id: source.id.clone(),
            translation_id: translation.id.clone(),
        });
    }
    if source.solution.step_count() != translation.solution.step_count() {
        return Ok(FilterDecision::RejectStepParity);
    }
    let source_tokens = extract_math_tokens(&instance_text(source), decimal_comma);
    let translation_tokens = extract_math_tokens(&instance_text(translation), decimal_comma);
    if source_tokens.numbers != translation_tokens.numbers {
        return Ok(FilterDecision::RejectNumbers);
    }
    if source_tokens.equations != translation_tokens.equations {
        return Ok(FilterDecision::RejectEquations);
    }
    Ok(FilterDecision::Keep)
}

fn instance_text(instance: &TrainingInstance) -> String {
    let mut text = instance.question.clone();
    for step in &instance.solution.steps {
        text.push('\n');
        text.push_str(&step.text);
    }
    text
}

/// Tally of filter decisions. `total` always equals the sum of the other
/// four fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub total: usize,
    pub kept: usize,
    pub rejected_numbers: usize,
    pub rejected_equations: usize,
    pub rejected_step_parity: usize,
}

impl ConsistencyReport {
    pub fn record(&mut self, decision: FilterDecision) {
        self.total += 1;
        match decision {
            FilterDecision::Keep => self.kept += 1,
            FilterDecision::RejectNumbers => self.rejected_numbers += 1,
            FilterDecision::RejectEquations => self.rejected_equations += 1,
            FilterDecision::RejectStepParity => self.rejected_step_parity += 1,
        }
    }

    /// Fixed-column CSV rendering with a header row.
    pub fn to_csv(&self) -> String {
        format!(
            "total,kept,rejected_numbers,rejected_equations,rejected_step_parity\n{},{},{},{},{}\n",
            self.total, self.kept, self.rejected_numbers, self.rejected_equations,
            self.rejected_step_parity
        )
    }
}

/// Filters a translated corpus against its sources, pairing records by id.
/// Every translation must have a source; translations are processed in input
/// order and kept ones are returned in that order. The decimal convention
/// for each pair follows the translation's language under `rules`.
pub fn filter_corpus(
    sources: &[TrainingInstance],
    translations: &[TrainingInstance],
    rules: &AnswerRules,
) -> Result<(Vec<TrainingInstance>, ConsistencyReport)> {
    let mut by_id: HashMap<&str, &TrainingInstance> = HashMap::new();
    for source in sources {
        if by_id.insert(source.id.as_str(), source).is_some() {
            return Err(Error::DuplicateId { id: source.id.clone(), line: 0 });
        }
    }
    let mut kept = Vec::new();
    let mut report = ConsistencyReport::default();
    for translation in translations {
        let source = by_id
            .get(translation.id.as_str())
            .ok_or_else(|| Error::UnpairedId { id: translation.id.clone() })?;
        let decimal_comma = rules.decimal_comma_for(&translation.language);
        let decision = consistency_filter(source, translation, decimal_comma)?;
        report.record(decision);
        if decision == FilterDecision::Keep {
            kept.push(translation.clone());
        }
    }
    Ok((kept, report))
}

/// Step-count statistics over a corpus. `mean_steps` is kept at full
/// precision; emitters round to two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetStats {
    pub examples: usize,
    pub max_steps: usize,
    pub min_steps: usize,
    pub mean_steps: f64,
}

impl DatasetStats {
    pub fn from_step_counts(counts: &[usize]) -> Result<DatasetStats> {
        if counts.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let total: usize = counts.iter().sum();
        Ok(DatasetStats {
            examples: counts.len(),
            max_steps: *counts.iter().max().unwrap(),
            min_steps: *counts.iter().min().unwrap(),
            mean_steps: total as f64 / counts.len() as f64,
        })
    }

    /// Two-decimal rendering used by all emitters.
    pub fn mean_rounded(&self) -> f64 {
        (self.mean_steps * 100.0).round() / 100.0
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "examples": self.examples,
            "max_steps": self.max_steps,
            "min_steps": self.min_steps,
            "mean_steps": self.mean_rounded(),
        })
    }

    pub fn to_csv(&self) -> String {
        format!(
            "examples,max_steps,min_steps,mean_steps\n{},{},{},{:.2}\n",
            self.examples, self.max_steps, self.min_steps, self.mean_steps
        )
    }
}

/// Statistics over a loaded corpus.
pub fn compute_stats(instances: &[TrainingInstance]) -> Result<DatasetStats> {
    let counts: Vec<usize> = instances.iter().map(|i| i.solution.step_count()).collect();
    DatasetStats::from_step_counts(&counts)
}

/// Non-English training languages, in the order remainder instances are
/// assigned. This is lexicographic order.
pub const MIXTURE_FILL_LANGUAGES: [&str; 6] = ["de", "es", "fr", "ru", "sw", "zh"];

/// Builds a training mixture of `budget` instances where `english_pct`
/// percent (rounded half-up) come from the English pool and the remainder is
/// split as evenly as possible across the six non-English training
/// languages, any leftover going to the lexicographically first ones.
///
/// Sampling is without replacement per pool and fully determined by `seed`;
/// the combined output is shuffled by the same seed.
pub fn make_mixture(
    pools: &BTreeMap<String, Vec<TrainingInstance>>,
    english_pct: u32,
    budget: usize,
    seed: u64,
) -> Result<Vec<TrainingInstance>> {
    if english_pct > 100 {
        return Err(Error::bad_parameter(
            "english_pct",
            format!("must be 0..=100, got {english_pct}"),
        ));
    }
    let english = ((budget as u128 * english_pct as u128 + 50) / 100) as usize;
    let rest = budget - english;
    let base = rest / MIXTURE_FILL_LANGUAGES.len();
    let extra = rest % MIXTURE_FILL_LANGUAGES.len();

    let mut needs: Vec<(&str, usize)> = vec![("en", english)];
    for (i, lang) in MIXTURE_FILL_LANGUAGES.iter().enumerate() {
        needs.push((lang, base + usize::from(i < extra)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mixture = Vec::with_capacity(budget);
    for (lang, need) in needs {
        if need == 0 {
            continue;
        }
        let pool = pools.get(lang).map(|p| p.as_slice()).unwrap_or(&[]);
        if pool.len() < need {
            return Err(Error::InsufficientPool {
                language: lang.to_string(),
                need,
                have: pool.len(),
            });
        }
        let mut indices: Vec<usize> = (0..pool.len()).collect();
        indices.shuffle(&mut rng);
        for &index in indices.iter().take(need) {
            mixture.push(pool[index].clone());
        }
    }
    mixture.shuffle(&mut rng);
    Ok(mixture)
}
