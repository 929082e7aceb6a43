//! Data model: reasoning steps, solutions, labeled training instances, and
//! candidate sets awaiting verification.

use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use serde::{Deserialize, Serialize};

/// Step-level correctness. Stored corpora may use a three-valued encoding
/// (`1`, `0`, `-1`); the loader folds the neutral value into one of these two
/// at ingestion so everything downstream is binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepLabel {
    Correct,
    Incorrect,
}

impl StepLabel {
    /// Target value used by the loss functions.
    pub fn target(self) -> f64 {
        match self {
            StepLabel::Correct => 1.0,
            StepLabel::Incorrect => 0.0,
        }
    }
}

/// One reasoning step. `index` is 0-based and contiguous within a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub index: usize,
    pub text: String,
    pub label: Option<StepLabel>,
}

impl Step {
    pub fn new(index: usize, text: impl Into<String>) -> Self {
        Step {
            index,
            text: text.into(),
            label: None,
        }
    }

    pub fn labeled(index: usize, text: impl Into<String>, label: StepLabel) -> Self {
        Step {
            index,
            text: text.into(),
            label: Some(label),
        }
    }
}

/// An ordered chain of steps plus the final answer exactly as produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub steps: Vec<Step>,
    pub answer_raw: String,
}

impl Solution {
    pub fn new(steps: Vec<Step>, answer_raw: impl Into<String>) -> Self {
        Solution {
            steps,
            answer_raw: answer_raw.into(),
        }
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn step_texts(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.text.as_str()).collect()
    }

    /// Checks the structural invariants: at least one step, contiguous 0-based
    /// indices, and no step blank after trimming.
    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (i, step) in self.steps.iter().enumerate() {
            if step.index != i {
                return Err(Error::schema(
                    0,
                    "steps",
                    format!("step index {} at position {i}", step.index),
                ));
            }
            if step.text.trim().is_empty() {
                return Err(Error::schema(0, "steps", format!("step {i} is blank")));
            }
        }
        Ok(())
    }
}

/// Where a training instance originated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "PRM800K")]
    Prm800k,
    #[serde(rename = "MathShepherd")]
    MathShepherd,
    #[serde(rename = "Other")]
    Other,
}

impl Source {
    /// Lenient parse: recognized names map to their variant, anything else to
    /// `Other`, so corpora from new sources still load.
    pub fn parse(name: &str) -> Source {
        let folded: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match folded.as_str() {
            "prm800k" => Source::Prm800k,
            "mathshepherd" => Source::MathShepherd,
            _ => Source::Other,
        }
    }
}

/// A fully labeled solution used for training and analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub id: String,
    pub language: LanguageCode,
    pub question: String,
    pub solution: Solution,
    pub source: Source,
}

impl TrainingInstance {
    /// Structural invariants plus: every step carries a label.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::schema(0, "id", "empty id"));
        }
        self.solution.validate()?;
        for step in &self.solution.steps {
            if step.label.is_none() {
                return Err(Error::UnlabeledStep {
                    id: self.id.clone(),
                    step_index: step.index,
                });
            }
        }
        Ok(())
    }

    /// Loss targets for each step, in order.
    pub fn step_targets(&self) -> Result<Vec<f64>> {
        self.solution
            .steps
            .iter()
            .map(|s| {
                s.label.map(StepLabel::target).ok_or_else(|| Error::UnlabeledStep {
                    id: self.id.clone(),
                    step_index: s.index,
                })
            })
            .collect()
    }
}

/// N candidate solutions for one question, with the gold answer for scoring
/// the final selection. Candidate steps are unlabeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub id: String,
    pub language: LanguageCode,
    pub question: String,
    pub gold_answer: String,
    pub candidates: Vec<Solution>,
}

impl CandidateSet {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::schema(0, "id", "empty id"));
        }
        if self.candidates.is_empty() {
            return Err(Error::schema(0, "candidates", "no candidates"));
        }
        for candidate in &self.candidates {
            candidate.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_step_solution() -> Solution {
        Solution::new(
            vec![
                Step::labeled(0, "Add 2 and 3 to get 5.", StepLabel::Correct),
                Step::labeled(1, "So the answer is 5.", StepLabel::Correct),
            ],
            "5",
        )
    }

    #[test]
    fn valid_solution_passes() {
        assert!(two_step_solution().validate().is_ok());
    }

    #[test]
    fn empty_solution_rejected() {
        let solution = Solution::new(vec![], "5");
        assert!(matches!(solution.validate(), Err(Error::EmptyInput)));
    }

    #[test]
    fn blank_step_rejected() {
        let solution = Solution::new(vec![Step::new(0, "   ")], "5");
        assert!(matches!(solution.validate(), Err(Error::SchemaError { .. })));
    }

    #[test]
    fn non_contiguous_indices_rejected() {
        let solution = Solution::new(vec![Step::new(1, "first")], "5");
        assert!(matches!(solution.validate(), Err(Error::SchemaError { .. })));
    }

    #[test]
    fn unlabeled_training_step_rejected() {
        let mut solution = two_step_solution();
        solution.steps[1].label = None;
        let instance = TrainingInstance {
            id: "q1".into(),
            language: LanguageCode::new("en"),
            question: "What is 2 + 3?".into(),
            solution,
            source: Source::Prm800k,
        };
        assert!(matches!(
            instance.validate(),
            Err(Error::UnlabeledStep { step_index: 1, .. })
        ));
    }

    #[test]
    fn source_parse_is_lenient() {
        assert_eq!(Source::parse("PRM800K"), Source::Prm800k);
        assert_eq!(Source::parse("prm800k"), Source::Prm800k);
        assert_eq!(Source::parse("Math-Shepherd"), Source::MathShepherd);
        assert_eq!(Source::parse("math_shepherd"), Source::MathShepherd);
        assert_eq!(Source::parse("gsm8k"), Source::Other);
    }

    #[test]
    fn step_targets_match_labels() {
        let instance = TrainingInstance {
            id: "q1".into(),
            language: LanguageCode::new("en"),
            question: "q".into(),
            solution: Solution::new(
                vec![
                    Step::labeled(0, "good", StepLabel::Correct),
                    Step::labeled(1, "bad", StepLabel::Incorrect),
                ],
                "1",
            ),
            source: Source::Other,
        };
        assert_eq!(instance.step_targets().unwrap(), vec![1.0, 0.0]);
    }
}
