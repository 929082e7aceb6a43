//! A tiny trainable step scorer: hashed character trigram features into a
//! logistic regression, trained with seeded mini-batch gradient descent. It
//! exists to exercise the full training and verification pipeline end to end
//! on CPU in milliseconds, with bit-reproducible results.

use crate::domain::TrainingInstance;
use crate::error::{Error, Result};
use crate::scorers::losses::orm_loss;
use crate::scorers::{stable_hash, ScoreRequest, Scorer, StepScores};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// Largest relative error between analytic and numeric gradients that still
/// counts as a pass.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// Default central-difference step for the gradient check.
pub const DEFAULT_GRADCHECK_STEP: f64 = 1e-5;

/// Minimum number of weight coordinates the gradient check probes (plus the
/// bias); coordinates untouched by the data are padded in deterministically.
pub const GRADCHECK_MIN_COORDS: usize = 32;

const MODEL_FORMAT_VERSION: u32 = 1;

/// Hashed-trigram logistic regression. `dim` is the feature table size and
/// must be a power of two so that hashing can mask instead of mod.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyScorerModel {
    pub dim: usize,
    pub hash_seed: u64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Sparse L2-normalized feature vector, sorted by index.
pub type Features = Vec<(usize, f64)>;

/// Hashed character-trigram counts of `text`, L2-normalized. Trigrams are
/// windows of Unicode scalar values; a text shorter than three characters
/// contributes itself as a single token.
pub fn featurize(text: &str, dim: usize, hash_seed: u64) -> Features {
    debug_assert!(dim.is_power_of_two());
    let mask = dim - 1;
    let chars: Vec<char> = text.chars().collect();
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    let mut buffer = String::new();
    let bump = |token: &str, counts: &mut BTreeMap<usize, f64>| {
        let index = (stable_hash(hash_seed, token.as_bytes()) as usize) & mask;
        *counts.entry(index).or_insert(0.0) += 1.0;
    };
    if chars.len() < 3 {
        bump(text, &mut counts);
    } else {
        for window in chars.windows(3) {
            buffer.clear();
            buffer.extend(window);
            bump(&buffer, &mut counts);
        }
    }
    let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
    counts.into_iter().map(|(i, c)| (i, c / norm)).collect()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn prefix_text(question: &str, steps: &[&str], upto: usize) -> String {
    let mut text = question.to_string();
    for step in &steps[..=upto] {
        text.push('\n');
        text.push_str(step);
    }
    text
}

impl ToyScorerModel {
    fn dot(&self, features: &Features) -> f64 {
        features.iter().map(|&(i, v)| self.weights[i] * v).sum::<f64>() + self.bias
    }

    fn predict(&self, features: &Features) -> f64 {
        sigmoid(self.dot(features))
    }

    /// Scores one step from the concatenation of the question and every step
    /// up to and including it.
    pub fn score_prefix(&self, question: &str, steps: &[&str], upto: usize) -> f64 {
        self.predict(&featurize(
            &prefix_text(question, steps, upto),
            self.dim,
            self.hash_seed,
        ))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let raw = RawModel {
            format_version: MODEL_FORMAT_VERSION,
            dim: self.dim,
            hash_seed: self.hash_seed,
            weights: self.weights.clone(),
            bias: self.bias,
        };
        fs::write(path, serde_json::to_string(&raw).expect("model serializes"))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ToyScorerModel> {
        let text = fs::read_to_string(path)?;
        let raw: RawModel = serde_json::from_str(&text)
            .map_err(|e| Error::schema(0, "model", e.to_string()))?;
        if raw.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::schema(
                0,
                "format_version",
                format!("unsupported version {}", raw.format_version),
            ));
        }
        if raw.dim == 0 || !raw.dim.is_power_of_two() {
            return Err(Error::schema(0, "dim", format!("{} is not a power of two", raw.dim)));
        }
        if raw.weights.len() != raw.dim {
            return Err(Error::schema(
                0,
                "weights",
                format!("expected {} weights, got {}", raw.dim, raw.weights.len()),
            ));
        }
        if !raw.bias.is_finite() || raw.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::schema(0, "weights", "non-finite parameter"));
        }
        Ok(ToyScorerModel {
            dim: raw.dim,
            hash_seed: raw.hash_seed,
            weights: raw.weights,
            bias: raw.bias,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    format_version: u32,
    dim: usize,
    hash_seed: u64,
    weights: Vec<f64>,
    bias: f64,
}

impl Scorer for ToyScorerModel {
    fn score(&self, request: &ScoreRequest<'_>) -> Result<StepScores> {
        if request.steps.is_empty() {
            return Err(Error::EmptyInput);
        }
        let step_scores: Vec<f64> = (0..request.steps.len())
            .map(|i| self.score_prefix(request.question, request.steps, i))
            .collect();
        let solution_score = step_scores.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(StepScores::new(step_scores, Some(solution_score)))
    }
}

/// Training hyperparameters. Three independent seeds keep initialization,
/// shuffling, and feature hashing separately reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dim: usize,
    pub hash_seed: u64,
    pub init_seed: u64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            epochs: 10,
            learning_rate: 0.5,
            batch_size: 16,
            dim: 1024,
            hash_seed: 42,
            init_seed: 1,
            shuffle_seed: 2,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.dim == 0 || !self.dim.is_power_of_two() {
            return Err(Error::bad_parameter(
                "dim",
                format!("{} is not a power of two", self.dim),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::bad_parameter("batch_size", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::bad_parameter("learning_rate", "must be positive"));
        }
        Ok(())
    }
}

/// A trained model together with the mean per-instance process loss over the
/// whole corpus after each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub model: ToyScorerModel,
    pub loss_trace: Vec<f64>,
}

struct Example {
    features: Features,
    target: f64,
}

fn build_examples(
    instances: &[TrainingInstance],
    dim: usize,
    hash_seed: u64,
) -> Result<(Vec<Example>, usize)> {
    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut examples = Vec::new();
    for instance in instances {
        let targets = instance.step_targets()?;
        let steps = instance.solution.step_texts();
        for (i, target) in targets.into_iter().enumerate() {
            examples.push(Example {
                features: featurize(&prefix_text(&instance.question, &steps, i), dim, hash_seed),
                target,
            });
        }
    }
    Ok((examples, instances.len()))
}

fn corpus_loss(model: &ToyScorerModel, examples: &[Example], instance_count: usize) -> f64 {
    let total: f64 = examples
        .iter()
        .map(|e| orm_loss(e.target, model.predict(&e.features)))
        .sum();
    total / instance_count as f64
}

/// Trains the toy scorer with mini-batch gradient descent. Every labeled
/// step becomes one example whose input is the question plus the step prefix
/// ending at it. With `epochs == 0` the initialized model is returned
/// untouched and the loss trace is empty. Identical inputs and config
/// produce bit-identical models.
pub fn train_toy(instances: &[TrainingInstance], config: &TrainConfig) -> Result<TrainResult> {
    config.validate()?;
    let (examples, instance_count) = build_examples(instances, config.dim, config.hash_seed)?;

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    let weights: Vec<f64> = (0..config.dim)
        .map(|_| (init_rng.random::<f64>() * 2.0 - 1.0) * 0.01)
        .collect();
    let mut model = ToyScorerModel {
        dim: config.dim,
        hash_seed: config.hash_seed,
        weights,
        bias: 0.0,
    };

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut weight_grad = vec![0.0f64; config.dim];

    for _ in 0..config.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(config.batch_size) {
            let mut touched: Vec<usize> = Vec::new();
            let mut bias_grad = 0.0;
            for &example_index in batch {
                let example = &examples[example_index];
                let error = model.predict(&example.features) - example.target;
                for &(index, value) in &example.features {
                    if weight_grad[index] == 0.0 {
                        touched.push(index);
                    }
                    weight_grad[index] += error * value;
                }
                bias_grad += error;
            }
            let scale = config.learning_rate / batch.len() as f64;
            for &index in &touched {
                model.weights[index] -= scale * weight_grad[index];
                weight_grad[index] = 0.0;
            }
            model.bias -= scale * bias_grad;
        }
        loss_trace.push(corpus_loss(&model, &examples, instance_count));
    }

    Ok(TrainResult { model, loss_trace })
}

/// Result of a finite-difference check of the training gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub coordinates_checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error <= GRADCHECK_TOLERANCE
    }
}

/// Compares the analytic gradient of the corpus loss against central finite
/// differences with step `step_size`. Probes every weight coordinate the
/// data touches, padded deterministically to at least
/// [`GRADCHECK_MIN_COORDS`] coordinates, plus the bias. Relative error uses
/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check(
    model: &ToyScorerModel,
    instances: &[TrainingInstance],
    step_size: f64,
) -> Result<GradCheckReport> {
    if !(step_size.is_finite() && step_size > 0.0) {
        return Err(Error::bad_parameter("step_size", "must be positive"));
    }
    let (examples, instance_count) = build_examples(instances, model.dim, model.hash_seed)?;

    let mut analytic_weights = vec![0.0f64; model.dim];
    let mut analytic_bias = 0.0;
    for example in &examples {
        let error = model.predict(&example.features) - example.target;
        for &(index, value) in &example.features {
            analytic_weights[index] += error * value;
        }
        analytic_bias += error;
    }
    let scale = 1.0 / instance_count as f64;
    for value in &mut analytic_weights {
        *value *= scale;
    }
    analytic_bias *= scale;

    let mut coords: Vec<usize> = analytic_weights
        .iter()
        .enumerate()
        .filter(|(_, g)| **g != 0.0)
        .map(|(i, _)| i)
        .collect();
    let want = GRADCHECK_MIN_COORDS.min(model.dim);
    let mut pad_rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
    while coords.len() < want {
        let candidate = pad_rng.random_range(0..model.dim);
        if !coords.contains(&candidate) {
            coords.push(candidate);
        }
    }

    let mut probe = model.clone();
    let mut max_relative_error = 0.0f64;
    let relative = |analytic: f64, numeric: f64| {
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        (analytic - numeric).abs() / denom
    };

    for &index in &coords {
        let original = probe.weights[index];
        probe.weights[index] = original + step_size;
        let upper = corpus_loss(&probe, &examples, instance_count);
        probe.weights[index] = original - step_size;
        let lower = corpus_loss(&probe, &examples, instance_count);
        probe.weights[index] = original;
        let numeric = (upper - lower) / (2.0 * step_size);
        max_relative_error = max_relative_error.max(relative(analytic_weights[index], numeric));
    }

    let original = probe.bias;
    probe.bias = original + step_size;
    let upper = corpus_loss(&probe, &examples, instance_count);
    probe.bias = original - step_size;
    let lower = corpus_loss(&probe, &examples, instance_count);
    probe.bias = original;
    let numeric = (upper - lower) / (2.0 * step_size);
    max_relative_error = max_relative_error.max(relative(analytic_bias, numeric));

    Ok(GradCheckReport {
        max_relative_error,
        coordinates_checked: coords.len() + 1,
    })
}
