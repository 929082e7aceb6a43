//! Best-of-N candidate selection: the four selection strategies and the
//! per-solution aggregation of step scores.

use crate::answers::{answers_equal, AnswerRules, CanonicalAnswer};
use crate::domain::CandidateSet;
use crate::error::{Error, Result};
use crate::scorers::StepScores;
use std::fmt;
use std::str::FromStr;

/// How per-step scores collapse into one solution score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregation {
    Mean,
    Min,
    Last,
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Mean => "mean",
            Aggregation::Min => "min",
            Aggregation::Last => "last",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Aggregation> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "min" => Ok(Aggregation::Min),
            "last" => Ok(Aggregation::Last),
            other => Err(Error::bad_parameter(
                "aggregation",
                format!("unknown aggregation {other:?}, expected mean, min, or last"),
            )),
        }
    }
}

/// Collapses step scores with the given aggregation.
pub fn aggregate(aggregation: Aggregation, step_scores: &[f64]) -> Result<f64> {
    if step_scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(match aggregation {
        Aggregation::Mean => step_scores.iter().sum::<f64>() / step_scores.len() as f64,
        Aggregation::Min => step_scores.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregation::Last => *step_scores.last().unwrap(),
    })
}

/// A best-of-N selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Take the first candidate; the sampling-order baseline.
    Baseline,
    /// Majority vote over canonicalized answers.
    SelfConsistency,
    /// Highest solution-level score.
    Orm,
    /// Highest aggregated step score.
    Prm(Aggregation),
}

impl Strategy {
    /// Whether selection needs step scores at all.
    pub fn requires_scores(&self) -> bool {
        matches!(self, Strategy::Orm | Strategy::Prm(_))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Baseline => f.write_str("baseline"),
            Strategy::SelfConsistency => f.write_str("sc"),
            Strategy::Orm => f.write_str("orm"),
            Strategy::Prm(aggregation) => write!(f, "prm-{aggregation}"),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Strategy> {
        match s {
            "baseline" => Ok(Strategy::Baseline),
            "sc" => Ok(Strategy::SelfConsistency),
            "orm" => Ok(Strategy::Orm),
            "prm" | "prm-mean" => Ok(Strategy::Prm(Aggregation::Mean)),
            "prm-min" => Ok(Strategy::Prm(Aggregation::Min)),
            "prm-last" => Ok(Strategy::Prm(Aggregation::Last)),
            other => Err(Error::bad_parameter(
                "strategy",
                format!(
                    "unknown strategy {other:?}, expected baseline, sc, orm, prm, prm-mean, prm-min, or prm-last"
                ),
            )),
        }
    }
}

/// The outcome of selecting one candidate from a set.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub chosen_index: usize,
    pub chosen_answer: CanonicalAnswer,
    /// One aggregated score per considered candidate, for score-based
    /// strategies.
    pub per_candidate_scores: Option<Vec<f64>>,
    /// Vote tally in first-appearance order, for self-consistency.
    pub vote_counts: Option<Vec<(CanonicalAnswer, usize)>>,
}

/// Selects from the full candidate list. `scores` must hold one entry per
/// candidate for score-based strategies and may be `None` otherwise.
pub fn select(
    set: &CandidateSet,
    scores: Option<&[StepScores]>,
    strategy: Strategy,
    rules: &AnswerRules,
) -> Result<Selection> {
    select_bounded(set, scores, strategy, rules, set.candidates.len())
}

/// Selects from only the first `limit` candidates. Used to sweep best-of-N
/// over prefixes of a fixed sample without rescoring.
pub fn select_bounded(
    set: &CandidateSet,
    scores: Option<&[StepScores]>,
    strategy: Strategy,
    rules: &AnswerRules,
    limit: usize,
) -> Result<Selection> {
    if limit == 0 || limit > set.candidates.len() {
        return Err(Error::bad_parameter(
            "limit",
            format!("limit {limit} outside 1..={}", set.candidates.len()),
        ));
    }

    match strategy {
        Strategy::Baseline => Ok(Selection {
            chosen_index: 0,
            chosen_answer: rules.canonical_answer_lossy(&set.candidates[0].answer_raw, &set.language),
            per_candidate_scores: None,
            vote_counts: None,
        }),
        Strategy::SelfConsistency => {
            // Equivalence classes in first-appearance order; each class keeps
            // the index of its first member as the representative.
            let mut classes: Vec<(CanonicalAnswer, usize, usize)> = Vec::new();
            for index in 0..limit {
                let answer =
                    rules.canonical_answer_lossy(&set.candidates[index].answer_raw, &set.language);
                match classes.iter_mut().find(|(a, _, _)| answers_equal(a, &answer)) {
                    Some((_, _, count)) => *count += 1,
                    None => classes.push((answer, index, 1)),
                }
            }
            // Strict comparison: on a tie the earliest-created class wins,
            // which is the class containing the lowest candidate index.
            let mut winner = 0;
            for (i, class) in classes.iter().enumerate() {
                if class.2 > classes[winner].2 {
                    winner = i;
                }
            }
            Ok(Selection {
                chosen_index: classes[winner].1,
                chosen_answer: classes[winner].0.clone(),
                per_candidate_scores: None,
                vote_counts: Some(
                    classes.into_iter().map(|(answer, _, count)| (answer, count)).collect(),
                ),
            })
        }
        Strategy::Orm | Strategy::Prm(_) => {
            let scores = scores.ok_or_else(|| Error::NoAggregation {
                strategy: strategy.to_string(),
            })?;
            if scores.len() < limit {
                return Err(Error::LengthMismatch { expected: limit, actual: scores.len() });
            }
            let mut values = Vec::with_capacity(limit);
            for candidate_scores in &scores[..limit] {
                let value = match strategy {
                    Strategy::Orm => candidate_scores
                        .solution_score
                        .ok_or(Error::MissingSolutionScore)?,
                    Strategy::Prm(aggregation) => {
                        aggregate(aggregation, &candidate_scores.step_scores)?
                    }
                    _ => unreachable!(),
                };
                values.push(value);
            }
            // Strictly-greater comparison keeps the lowest index on ties.
            let mut best = 0;
            for (index, value) in values.iter().enumerate() {
                if *value > values[best] {
                    best = index;
                }
            }
            Ok(Selection {
                chosen_index: best,
                chosen_answer: rules
                    .canonical_answer_lossy(&set.candidates[best].answer_raw, &set.language),
                per_candidate_scores: Some(values),
                vote_counts: None,
            })
        }
    }
}

/// Whether candidate `index` answers the set's question correctly.
pub fn candidate_correct(set: &CandidateSet, index: usize, rules: &AnswerRules) -> bool {
    let gold = rules.canonical_answer_lossy(&set.gold_answer, &set.language);
    let answer = rules.canonical_answer_lossy(&set.candidates[index].answer_raw, &set.language);
    answers_equal(&answer, &gold)
}

/// Perfect scores: 1.0 on every step of a correct candidate, 0.0 otherwise.
/// An upper bound for score-based selection, used in tests and calibration.
pub fn oracle_scores(set: &CandidateSet, rules: &AnswerRules) -> Vec<StepScores> {
    set.candidates
        .iter()
        .enumerate()
        .map(|(index, candidate)| {
            let value = if candidate_correct(set, index, rules) { 1.0 } else { 0.0 };
            StepScores::new(vec![value; candidate.steps.len()], Some(value))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Solution, Step};
    use crate::lang::classify_language;
    use proptest::{prop_assert, prop_assert_eq, proptest};

    fn candidate(answer: &str, step_scores_len: usize) -> Solution {
        Solution::new(
            (0..step_scores_len.max(1))
                .map(|i| Step::new(i, format!("step {i}")))
                .collect(),
            answer,
        )
    }

    fn make_set(gold: &str, answers: &[&str]) -> CandidateSet {
        CandidateSet {
            id: "q1".to_string(),
            language: classify_language("en"),
            question: "What is the answer?".to_string(),
            gold_answer: gold.to_string(),
            candidates: answers.iter().map(|a| candidate(a, 2)).collect(),
        }
    }

    fn step_scores(per_candidate: &[&[f64]]) -> Vec<StepScores> {
        per_candidate
            .iter()
            .map(|s| {
                let min = s.iter().copied().fold(f64::INFINITY, f64::min);
                StepScores::new(s.to_vec(), Some(min))
            })
            .collect()
    }

    #[test]
    fn strategy_names_round_trip() {
        let all = [
            Strategy::Baseline,
            Strategy::SelfConsistency,
            Strategy::Orm,
            Strategy::Prm(Aggregation::Mean),
            Strategy::Prm(Aggregation::Min),
            Strategy::Prm(Aggregation::Last),
        ];
        for strategy in all {
            assert_eq!(strategy.to_string().parse::<Strategy>().unwrap(), strategy);
        }
        assert_eq!("prm".parse::<Strategy>().unwrap(), Strategy::Prm(Aggregation::Mean));
        assert!("majority".parse::<Strategy>().is_err());
        assert!("median".parse::<Aggregation>().is_err());
    }

    #[test]
    fn aggregate_collapses_step_scores() {
        let scores = [0.2, 0.8, 0.5];
        assert_eq!(aggregate(Aggregation::Mean, &scores).unwrap(), 0.5);
        assert_eq!(aggregate(Aggregation::Min, &scores).unwrap(), 0.2);
        assert_eq!(aggregate(Aggregation::Last, &scores).unwrap(), 0.5);
        assert!(matches!(aggregate(Aggregation::Mean, &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn baseline_takes_the_first_candidate() {
        let set = make_set("4", &["5", "4"]);
        let selection = select(&set, None, Strategy::Baseline, &AnswerRules::default()).unwrap();
        assert_eq!(selection.chosen_index, 0);
        assert_eq!(selection.chosen_answer, CanonicalAnswer::from_integer(5));
        assert!(selection.per_candidate_scores.is_none());
        assert!(selection.vote_counts.is_none());
    }

    #[test]
    fn self_consistency_votes_over_canonical_answers() {
        // 4, 4.0, and 8/2 are one equivalence class despite distinct text.
        let set = make_set("4", &["5", "4.0", "8/2", "4", "5"]);
        let selection =
            select(&set, None, Strategy::SelfConsistency, &AnswerRules::default()).unwrap();
        assert_eq!(selection.chosen_index, 1);
        assert_eq!(selection.chosen_answer, CanonicalAnswer::from_integer(4));
        let votes = selection.vote_counts.unwrap();
        assert_eq!(votes.len(), 2);
        assert_eq!(votes[0], (CanonicalAnswer::from_integer(5), 2));
        assert_eq!(votes[1], (CanonicalAnswer::from_integer(4), 3));
    }

    #[test]
    fn self_consistency_tie_goes_to_lowest_index_class() {
        let set = make_set("8", &["7", "8", "7", "8"]);
        let selection =
            select(&set, None, Strategy::SelfConsistency, &AnswerRules::default()).unwrap();
        assert_eq!(selection.chosen_index, 0);
        assert_eq!(selection.chosen_answer, CanonicalAnswer::from_integer(7));
    }

    #[test]
    fn orm_picks_highest_solution_score() {
        let set = make_set("4", &["5", "4", "6"]);
        let mut scores = step_scores(&[&[0.3, 0.3], &[0.9, 0.9], &[0.4, 0.4]]);
        scores[0].solution_score = Some(0.2);
        scores[1].solution_score = Some(0.9);
        scores[2].solution_score = Some(0.9);
        let selection =
            select(&set, Some(&scores), Strategy::Orm, &AnswerRules::default()).unwrap();
        assert_eq!(selection.chosen_index, 1);
        assert_eq!(selection.per_candidate_scores, Some(vec![0.2, 0.9, 0.9]));
    }

    #[test]
    fn orm_requires_solution_scores() {
        let set = make_set("4", &["5", "4"]);
        let mut scores = step_scores(&[&[0.3], &[0.9]]);
        scores[1].solution_score = None;
        assert!(matches!(
            select(&set, Some(&scores), Strategy::Orm, &AnswerRules::default()),
            Err(Error::MissingSolutionScore)
        ));
    }

    #[test]
    fn score_strategies_fail_without_scores() {
        let set = make_set("4", &["5", "4"]);
        for strategy in [Strategy::Orm, Strategy::Prm(Aggregation::Mean)] {
            assert!(matches!(
                select(&set, None, strategy, &AnswerRules::default()),
                Err(Error::NoAggregation { .. })
            ));
        }
    }

    #[test]
    fn prm_aggregations_pick_different_winners() {
        let set = make_set("4", &["5", "4", "6"]);
        let scores = step_scores(&[&[0.9, 0.5], &[0.65, 0.65], &[0.1, 0.9]]);
        let rules = AnswerRules::default();

        let mean = select(&set, Some(&scores), Strategy::Prm(Aggregation::Mean), &rules).unwrap();
        assert_eq!(mean.chosen_index, 0);
        let min = select(&set, Some(&scores), Strategy::Prm(Aggregation::Min), &rules).unwrap();
        assert_eq!(min.chosen_index, 1);
        let last = select(&set, Some(&scores), Strategy::Prm(Aggregation::Last), &rules).unwrap();
        assert_eq!(last.chosen_index, 2);
    }

    #[test]
    fn prm_tie_goes_to_lowest_index() {
        let set = make_set("4", &["5", "4", "6"]);
        let scores = step_scores(&[&[0.7, 0.7], &[0.7, 0.7], &[0.2, 0.2]]);
        let selection = select(
            &set,
            Some(&scores),
            Strategy::Prm(Aggregation::Mean),
            &AnswerRules::default(),
        )
        .unwrap();
        assert_eq!(selection.chosen_index, 0);
    }

    #[test]
    fn bounded_selection_ignores_later_candidates() {
        let set = make_set("4", &["5", "5", "4", "4", "4"]);
        let rules = AnswerRules::default();
        let first_two =
            select_bounded(&set, None, Strategy::SelfConsistency, &rules, 2).unwrap();
        assert_eq!(first_two.chosen_answer, CanonicalAnswer::from_integer(5));
        let all = select(&set, None, Strategy::SelfConsistency, &rules).unwrap();
        assert_eq!(all.chosen_answer, CanonicalAnswer::from_integer(4));

        assert!(select_bounded(&set, None, Strategy::Baseline, &rules, 0).is_err());
        assert!(select_bounded(&set, None, Strategy::Baseline, &rules, 6).is_err());
    }

    #[test]
    fn score_list_must_cover_the_limit() {
        let set = make_set("4", &["5", "4", "6"]);
        let scores = step_scores(&[&[0.3], &[0.9]]);
        assert!(matches!(
            select(&set, Some(&scores), Strategy::Orm, &AnswerRules::default()),
            Err(Error::LengthMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn oracle_scores_mark_correct_candidates() {
        let set = make_set("4", &["5", "4.0", "6"]);
        let rules = AnswerRules::default();
        let scores = oracle_scores(&set, &rules);
        assert_eq!(scores[0].solution_score, Some(0.0));
        assert_eq!(scores[1].solution_score, Some(1.0));
        assert_eq!(scores[2].solution_score, Some(0.0));
        assert!(scores[1].step_scores.iter().all(|&s| s == 1.0));
        assert_eq!(scores[2].step_scores.len(), set.candidates[2].steps.len());

        let selection = select(&set, Some(&scores), Strategy::Orm, &rules).unwrap();
        assert!(candidate_correct(&set, selection.chosen_index, &rules));
    }

    #[test]
    fn malformed_candidate_answers_do_not_abort_selection() {
        let set = make_set("4", &[r"\boxed{1/0}", "4"]);
        let selection =
            select(&set, None, Strategy::SelfConsistency, &AnswerRules::default()).unwrap();
        assert_eq!(selection.chosen_index, 0);
        assert!(!candidate_correct(&set, 0, &AnswerRules::default()));
        assert!(candidate_correct(&set, 1, &AnswerRules::default()));
    }

    proptest! {
        #[test]
        fn orm_argmax_prefers_lowest_index(values in proptest::collection::vec(0.0f64..=1.0, 1..20)) {
            let answers: Vec<String> = (0..values.len()).map(|i| i.to_string()).collect();
            let answer_refs: Vec<&str> = answers.iter().map(|s| s.as_str()).collect();
            let set = make_set("0", &answer_refs);
            let scores: Vec<StepScores> = values
                .iter()
                .map(|&v| StepScores::new(vec![v, v], Some(v)))
                .collect();
            let selection =
                select(&set, Some(&scores), Strategy::Orm, &AnswerRules::default()).unwrap();
            let chosen = values[selection.chosen_index];
            for (index, &value) in values.iter().enumerate() {
                prop_assert!(value <= chosen);
                if index < selection.chosen_index {
                    prop_assert!(value < chosen);
                }
            }
        }

        #[test]
        fn self_consistency_matches_brute_force_mode(
            answers in proptest::collection::vec(0u8..4, 1..24)
        ) {
            let texts: Vec<String> = answers.iter().map(|a| a.to_string()).collect();
            let refs: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
            let set = make_set("0", &refs);
            let selection =
                select(&set, None, Strategy::SelfConsistency, &AnswerRules::default()).unwrap();

            // Brute force: count each distinct value, take the max count, and
            // among maximal values take the one whose first occurrence is
            // earliest.
            let mut counts = std::collections::BTreeMap::new();
            for &a in &answers {
                *counts.entry(a).or_insert(0usize) += 1;
            }
            let max = *counts.values().max().unwrap();
            let winner = answers
                .iter()
                .position(|a| counts[a] == max)
                .unwrap();
            prop_assert_eq!(selection.chosen_index, winner);
        }
    }
}
