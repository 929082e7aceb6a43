//! Step scoring: the [`Scorer`] trait plus the deterministic mock scorer and
//! the file-backed scorer used to replay precomputed scores.

use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use serde::Deserialize;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

pub mod losses;
pub mod remote;
pub mod toy;

/// Scores for one candidate solution: one probability-of-correctness per
/// step, plus an optional whole-solution score for outcome-level ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct StepScores {
    pub step_scores: Vec<f64>,
    pub solution_score: Option<f64>,
}

impl StepScores {
    pub fn new(step_scores: Vec<f64>, solution_score: Option<f64>) -> StepScores {
        StepScores { step_scores, solution_score }
    }
}

/// One scoring request. `id` and `candidate_index` identify the candidate
/// within its set; file-backed scorers use them as the lookup key.
#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    pub id: &'a str,
    pub candidate_index: usize,
    pub question: &'a str,
    pub steps: &'a [&'a str],
    pub language: &'a LanguageCode,
}

/// A step scorer. Implementations must be safe to call from multiple threads
/// at once and must return exactly one score per requested step, each in
/// `[0, 1]`.
pub trait Scorer: Send + Sync {
    fn score(&self, request: &ScoreRequest<'_>) -> Result<StepScores>;
}

/// FNV-1a over `bytes`, folded onto a caller-chosen seed. Used wherever a
/// stable, platform-independent hash is needed (mock scores, feature
/// hashing), since the stdlib hasher is free to change between releases.
pub fn stable_hash(seed: u64, bytes: &[u8]) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf29ce484222325;
    const FNV_PRIME: u64 = 0x100000001b3;
    let mut hash = FNV_OFFSET ^ seed.wrapping_mul(FNV_PRIME);
    for &byte in bytes {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Deterministic stand-in scorer: every score is a pure function of the
/// question text, step text, and seed. Useful for wiring tests and for
/// exercising pipelines without a trained model.
#[derive(Debug, Clone, Copy)]
pub struct MockScorer {
    seed: u64,
}

impl MockScorer {
    pub fn new(seed: u64) -> MockScorer {
        MockScorer { seed }
    }

    fn unit_score(&self, question: &str, step: &str) -> f64 {
        let mut bytes = Vec::with_capacity(question.len() + step.len() + 1);
        bytes.extend_from_slice(question.as_bytes());
        bytes.push(0x1f);
        bytes.extend_from_slice(step.as_bytes());
        let hash = stable_hash(self.seed, &bytes);
        // Map the top 53 bits onto [0, 1); keeps the full double mantissa.
        (hash >> 11) as f64 / (1u64 << 53) as f64
    }
}

impl Scorer for MockScorer {
    fn score(&self, request: &ScoreRequest<'_>) -> Result<StepScores> {
        if request.steps.is_empty() {
            return Err(Error::EmptyInput);
        }
        let step_scores: Vec<f64> = request
            .steps
            .iter()
            .map(|step| self.unit_score(request.question, step))
            .collect();
        let solution_score = step_scores.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(StepScores::new(step_scores, Some(solution_score)))
    }
}

#[derive(Deserialize)]
struct RawScoreRecord {
    id: String,
    candidate_index: usize,
    step_scores: Vec<f64>,
    #[serde(default)]
    solution_score: Option<f64>,
}

/// Replays scores precomputed into a JSONL file, keyed by
/// `(id, candidate_index)`. Lookups for keys absent from the file fail with
/// [`Error::MissingScore`]; a stored score list whose length does not match
/// the request fails with [`Error::LengthMismatch`].
pub struct FileScorer {
    scores: HashMap<(String, usize), StepScores>,
}

impl FileScorer {
    pub fn from_path(path: impl AsRef<Path>) -> Result<FileScorer> {
        let reader = BufReader::new(File::open(path)?);
        let mut scores = HashMap::new();
        for (line_index, line) in reader.lines().enumerate() {
            let line_number = line_index + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawScoreRecord = serde_json::from_str(&line)
                .map_err(|e| Error::schema(line_number, "record", e.to_string()))?;
            if raw.step_scores.is_empty() {
                return Err(Error::schema(line_number, "step_scores", "empty score list"));
            }
            for &score in &raw.step_scores {
                if !(0.0..=1.0).contains(&score) || score.is_nan() {
                    return Err(Error::schema(
                        line_number,
                        "step_scores",
                        format!("score {score} outside [0, 1]"),
                    ));
                }
            }
            let key = (raw.id.clone(), raw.candidate_index);
            if scores.contains_key(&key) {
                return Err(Error::schema(
                    line_number,
                    "candidate_index",
                    format!("duplicate entry for id {} candidate {}", raw.id, raw.candidate_index),
                ));
            }
            scores.insert(key, StepScores::new(raw.step_scores, raw.solution_score));
        }
        Ok(FileScorer { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl Scorer for FileScorer {
    fn score(&self, request: &ScoreRequest<'_>) -> Result<StepScores> {
        let key = (request.id.to_string(), request.candidate_index);
        let stored = self.scores.get(&key).ok_or_else(|| Error::MissingScore {
            id: request.id.to_string(),
            candidate_index: request.candidate_index,
        })?;
        if stored.step_scores.len() != request.steps.len() {
            return Err(Error::LengthMismatch {
                expected: request.steps.len(),
                actual: stored.step_scores.len(),
            });
        }
        Ok(stored.clone())
    }
}

/// Serializes score records to JSONL in the format [`FileScorer`] reads.
pub fn scores_to_jsonl(records: &[(String, usize, StepScores)]) -> String {
    let mut out = String::new();
    for (id, candidate_index, scores) in records {
        let record = serde_json::json!({
            "id": id,
            "candidate_index": candidate_index,
            "step_scores": scores.step_scores,
            "solution_score": scores.solution_score,
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}
