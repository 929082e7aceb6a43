//! Synthetic data generators shared by the benchmarks. Everything is seeded
//! so repeated runs benchmark identical inputs.

use prmv_core::{classify_language, CandidateSet, Solution, Step, REPORT_LANGUAGE_ORDER};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Candidate sets with `candidates_per_set` solutions each. Roughly a third
/// of the candidates carry the gold answer; the rest spread over a few near
/// misses so self-consistency has real vote classes to count.
pub fn candidate_sets(count: usize, candidates_per_set: usize, seed: u64) -> Vec<CandidateSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|index| {
            let language = REPORT_LANGUAGE_ORDER[index % REPORT_LANGUAGE_ORDER.len()];
            let gold = rng.random_range(0..100u32);
            let candidates: Vec<Solution> = (0..candidates_per_set)
                .map(|candidate| {
                    let answer = if rng.random::<f64>() < 0.34 {
                        gold
                    } else {
                        gold + 1 + rng.random_range(0..5u32)
                    };
                    let steps: Vec<Step> = (0..3)
                        .map(|step| {
                            Step::new(
                                step,
                                format!("Candidate {candidate} derives an intermediate value in step {step}."),
                            )
                        })
                        .collect();
                    Solution::new(steps, format!("#### {answer}"))
                })
                .collect();
            CandidateSet {
                id: format!("bench-{index}"),
                language: classify_language(language),
                question: format!("Benchmark question {index}?"),
                gold_answer: gold.to_string(),
                candidates,
            }
        })
        .collect()
}

/// Step texts of increasing length, for featurization benchmarks.
pub fn step_texts(count: usize, seed: u64) -> Vec<String> {
    let words = [
        "multiply", "divide", "subtract", "combine", "factor", "expand", "substitute",
        "simplify", "rearrange", "evaluate",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|index| {
            let length = 6 + index % 18;
            let mut text = format!("Step {index}:");
            for _ in 0..length {
                text.push(' ');
                text.push_str(words[rng.random_range(0..words.len())]);
            }
            text.push_str(&format!(" giving {}.", rng.random_range(0..1000u32)));
            text
        })
        .collect()
}

/// (label, score) pairs for the loss benchmarks.
pub fn label_score_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (f64::from(rng.random_range(0..2u32)), rng.random::<f64>()))
        .collect()
}

/// Raw final-answer strings across the formats the canonicalizer handles:
/// plain integers, decimals, fractions, percents, LaTeX fractions, boxed
/// answers, and decimal-comma spellings.
pub fn raw_answers(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..500u32);
            let d = rng.random_range(2..40u32);
            match rng.random_range(0..7u32) {
                0 => format!("#### {n}"),
                1 => format!("The answer is {n}.{:02}", d),
                2 => format!("#### {n}/{d}"),
                3 => format!("#### {n}%"),
                4 => format!("The answer is \\boxed{{\\frac{{{n}}}{{{d}}}}}"),
                5 => format!("#### ${n},{:02}$", d),
                _ => format!("Answer: -{n}"),
            }
        })
        .collect()
}
