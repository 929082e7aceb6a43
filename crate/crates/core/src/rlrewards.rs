//! Turns scored steps into per-step reward events positioned by character
//! offset, the shape consumed by RL trainers that credit partial output.

use crate::error::Result;
use crate::lang::LanguageCode;
use crate::scorers::{ScoreRequest, Scorer};
use crate::segment::{segment_steps_spanned, segment_with_pattern, SegmentMode, StepSpan};
use crate::domain::Step;
use regex::Regex;
use serde::Serialize;

/// One reward, anchored one past the end of its step's trimmed text.
/// Offsets count Unicode scalar values of the original generated text, so
/// they are stable across encodings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardEvent {
    pub step_index: usize,
    pub char_end_offset: usize,
    pub reward: f64,
}

/// All reward events for one generation, in step order with strictly
/// increasing offsets, plus the scorer's whole-solution reward when it
/// provides one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardStream {
    pub id: String,
    pub events: Vec<RewardEvent>,
    pub outcome_reward: Option<f64>,
}

impl RewardStream {
    /// Affine rescaling `r -> r * scale + shift`, applied to every event and
    /// to the outcome reward. Used to map `[0, 1]` scores onto whatever
    /// range the consumer expects (e.g. `scale 2, shift -1` for `[-1, 1]`).
    pub fn scaled(mut self, scale: f64, shift: f64) -> RewardStream {
        for event in &mut self.events {
            event.reward = event.reward * scale + shift;
        }
        self.outcome_reward = self.outcome_reward.map(|r| r * scale + shift);
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "id": self.id,
            "events": self
                .events
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "step_index": e.step_index,
                        "char_end_offset": e.char_end_offset,
                        "reward": e.reward,
                    })
                })
                .collect::<Vec<_>>(),
            "outcome_reward": self.outcome_reward,
        })
    }
}

/// Segments `generated_text` with `mode`, scores the steps, and emits one
/// reward event per step.
pub fn emit_rewards(
    id: &str,
    question: &str,
    generated_text: &str,
    mode: SegmentMode,
    scorer: &dyn Scorer,
    language: &LanguageCode,
) -> Result<RewardStream> {
    let segments = segment_steps_spanned(generated_text, mode)?;
    stream_from_segments(id, question, &segments, scorer, language)
}

/// [`emit_rewards`] with a caller-supplied step-header pattern instead of a
/// built-in segmentation mode.
pub fn emit_rewards_with_pattern(
    id: &str,
    question: &str,
    generated_text: &str,
    header: &Regex,
    scorer: &dyn Scorer,
    language: &LanguageCode,
) -> Result<RewardStream> {
    let segments = segment_with_pattern(generated_text, header)?;
    stream_from_segments(id, question, &segments, scorer, language)
}

fn stream_from_segments(
    id: &str,
    question: &str,
    segments: &[(Step, StepSpan)],
    scorer: &dyn Scorer,
    language: &LanguageCode,
) -> Result<RewardStream> {
    let steps: Vec<&str> = segments.iter().map(|(step, _)| step.text.as_str()).collect();
    let scores = scorer.score(&ScoreRequest {
        id,
        candidate_index: 0,
        question,
        steps: &steps,
        language,
    })?;
    let events: Vec<RewardEvent> = scores
        .step_scores
        .iter()
        .zip(segments)
        .enumerate()
        .map(|(index, (&reward, (_, span)))| RewardEvent {
            step_index: index,
            char_end_offset: span.char_end,
            reward,
        })
        .collect();
    debug_assert!(events.windows(2).all(|w| w[0].char_end_offset < w[1].char_end_offset));
    Ok(RewardStream {
        id: id.to_string(),
        events,
        outcome_reward: scores.solution_score,
    })
}
