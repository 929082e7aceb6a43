//! Training losses for outcome- and process-level reward models.

use crate::error::{Error, Result};

/// Scores are clamped into `[SCORE_EPSILON, 1 - SCORE_EPSILON]` before any
/// logarithm so that saturated predictions yield large finite losses instead
/// of infinities.
pub const SCORE_EPSILON: f64 = 1e-12;

fn clamp_score(score: f64) -> f64 {
    score.clamp(SCORE_EPSILON, 1.0 - SCORE_EPSILON)
}

/// Binary cross-entropy between one outcome label and one solution-level
/// score: `-(y ln r + (1 - y) ln(1 - r))`.
pub fn orm_loss(label: f64, score: f64) -> f64 {
    let r = clamp_score(score);
    -(label * r.ln() + (1.0 - label) * (-r).ln_1p())
}

/// Process loss for one solution: the sum, not the mean, of per-step binary
/// cross-entropies. Keeping the sum unnormalized weights long solutions more
/// heavily, matching how the per-step supervision is consumed in training.
pub fn prm_loss(labels: &[f64], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), actual: scores.len() });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(labels
        .iter()
        .zip(scores)
        .map(|(&label, &score)| orm_loss(label, score))
        .sum())
}
