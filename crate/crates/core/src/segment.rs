//! Splitting generated solution text into steps.
//!
//! Two modes are supported: explicit `Step <k>:` header lines, and blocks
//! separated by blank lines. Generators that number their steps use the
//! first; free-form generators the second. Both preserve the original step
//! text verbatim (trimmed) and report character spans into the input so that
//! downstream consumers can anchor rewards to positions in the raw text.

use crate::domain::Step;
use crate::error::{Error, Result};
use once_cell::sync::Lazy;
use regex::Regex;

/// How to find step boundaries in generated text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentMode {
    /// Split on `Step <k>:` header lines (case-insensitive, `k` ascending).
    StepMarkers,
    /// Split on runs of one or more blank lines.
    BlankLine,
}

/// Character span of a step's trimmed text within the original input.
/// Offsets count Unicode scalar values, not bytes; `char_end` is one past the
/// last character.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepSpan {
    pub char_start: usize,
    pub char_end: usize,
}

/// Default header pattern. Group 1 captures the step number so ordering can
/// be checked. Localized header formats are supported by passing a custom
/// pattern to [`segment_with_pattern`].
pub static STEP_HEADER: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?mi)^[ \t]*step[ \t]+([0-9]+)[ \t]*:").unwrap());

/// Segments `text` into steps. See [`segment_steps_spanned`] for the variant
/// that also reports character spans.
pub fn segment_steps(text: &str, mode: SegmentMode) -> Result<Vec<Step>> {
    Ok(segment_steps_spanned(text, mode)?
        .into_iter()
        .map(|(step, _)| step)
        .collect())
}

/// Segments `text` and reports each step's character span.
///
/// Marker mode details: text before the first header becomes its own leading
/// step, text with no headers at all becomes a single step, and a header
/// whose body is blank contributes nothing. Headers must appear in strictly
/// increasing numeric order or the whole text is rejected.
pub fn segment_steps_spanned(text: &str, mode: SegmentMode) -> Result<Vec<(Step, StepSpan)>> {
    match mode {
        SegmentMode::StepMarkers => segment_markers(text, &STEP_HEADER),
        SegmentMode::BlankLine => segment_blank_lines(text),
    }
}

/// Marker-mode segmentation with a caller-supplied header pattern, for
/// corpora whose generators emit localized headers (e.g. `Schritt (\d+):`).
/// If the pattern has a first capture group that parses as an integer, header
/// ordering is enforced exactly as with the default pattern.
pub fn segment_with_pattern(text: &str, header: &Regex) -> Result<Vec<(Step, StepSpan)>> {
    segment_markers(text, header)
}

/// Joins step texts with the canonical delimiter for `mode`. Re-segmenting
/// the result yields the same step texts.
pub fn canonical_join(texts: &[&str], mode: SegmentMode) -> String {
    match mode {
        SegmentMode::StepMarkers => texts
            .iter()
            .enumerate()
            .map(|(i, t)| format!("Step {}: {}", i + 1, t))
            .collect::<Vec<_>>()
            .join("\n"),
        SegmentMode::BlankLine => texts.join("\n\n"),
    }
}

fn segment_markers(text: &str, header: &Regex) -> Result<Vec<(Step, StepSpan)>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut headers: Vec<(usize, usize)> = Vec::new(); // byte ranges of header matches
    let mut previous_number: Option<u64> = None;
    for caps in header.captures_iter(text) {
        let whole = caps.get(0).unwrap();
        if let Some(number) = caps.get(1).and_then(|m| m.as_str().parse::<u64>().ok()) {
            if let Some(previous) = previous_number {
                if number <= previous {
                    return Err(Error::NonMonotonicMarkers {
                        previous,
                        found: number,
                    });
                }
            }
            previous_number = Some(number);
        }
        headers.push((whole.start(), whole.end()));
    }

    let mut regions: Vec<(usize, usize)> = Vec::new(); // byte ranges of step bodies
    if headers.is_empty() {
        regions.push((0, text.len()));
    } else {
        regions.push((0, headers[0].0)); // leading text, usually blank
        for (i, &(_, body_start)) in headers.iter().enumerate() {
            let body_end = headers.get(i + 1).map_or(text.len(), |next| next.0);
            regions.push((body_start, body_end));
        }
    }

    collect_steps(text, &regions)
}

fn segment_blank_lines(text: &str) -> Result<Vec<(Step, StepSpan)>> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut regions: Vec<(usize, usize)> = Vec::new();
    let mut block_start: Option<usize> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let line_end = offset + line.len();
        if line.trim().is_empty() {
            if let Some(start) = block_start.take() {
                regions.push((start, offset));
            }
        } else if block_start.is_none() {
            block_start = Some(offset);
        }
        offset = line_end;
    }
    if let Some(start) = block_start {
        regions.push((start, text.len()));
    }

    collect_steps(text, &regions)
}

/// Trims each byte region, drops the blank ones, and assigns contiguous
/// indices. Errors with `EmptyInput` if no region has content.
fn collect_steps(text: &str, regions: &[(usize, usize)]) -> Result<Vec<(Step, StepSpan)>> {
    let mut steps = Vec::new();
    for &(start, end) in regions {
        let slice = &text[start..end];
        let trimmed = slice.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lead = slice.len() - slice.trim_start().len();
        let byte_start = start + lead;
        let char_start = text[..byte_start].chars().count();
        let char_end = char_start + trimmed.chars().count();
        steps.push((
            Step::new(steps.len(), trimmed),
            StepSpan {
                char_start,
                char_end,
            },
        ));
    }
    if steps.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(steps)
}
