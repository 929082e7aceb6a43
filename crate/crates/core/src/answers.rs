//! Final-answer extraction, canonicalization, and equality.
//!
//! Equality of numeric answers is exact: every parsed number becomes an
//! arbitrary-precision rational, so `0.75`, `3/4`, `\frac{3}{4}`, and `75%`
//! all compare equal with no float tolerance involved. Anything that does
//! not parse numerically is compared as a normalized symbolic string.

use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use num::{BigInt, BigRational, One, Signed, Zero};
use once_cell::sync::Lazy;
use regex::Regex;
use serde::Serialize;

/// Cues that introduce a final answer when no `\boxed{}` group is present.
/// `####` is the GSM8K convention; `answer:` matches case-insensitively.
pub const DEFAULT_ANSWER_CUES: [&str; 2] = ["####", "answer:"];

/// A fully normalized final answer.
#[derive(Debug, Clone, PartialEq)]
pub enum CanonicalAnswer {
    /// Exact rational value.
    Numeric(BigRational),
    /// Normalized text: whitespace removed, outer braces and dollar signs
    /// stripped, Latin letters lowercased.
    Symbolic(String),
}

impl CanonicalAnswer {
    pub fn is_numeric(&self) -> bool {
        matches!(self, CanonicalAnswer::Numeric(_))
    }

    /// Numeric answer from an integer, mostly for tests and fixtures.
    pub fn from_integer(n: i64) -> Self {
        CanonicalAnswer::Numeric(BigRational::from_integer(BigInt::from(n)))
    }

    /// Numeric answer from a numerator/denominator pair.
    pub fn from_ratio(numerator: i64, denominator: i64) -> Self {
        CanonicalAnswer::Numeric(BigRational::new(
            BigInt::from(numerator),
            BigInt::from(denominator),
        ))
    }
}

impl std::fmt::Display for CanonicalAnswer {
    /// Renders numerics as an exact decimal when the reduced denominator has
    /// only factors 2 and 5, otherwise as `numerator/denominator`. Feeding
    /// the rendering back through [`canonicalize`] reproduces the value.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CanonicalAnswer::Symbolic(s) => f.write_str(s),
            CanonicalAnswer::Numeric(r) => {
                let mut den = r.denom().clone();
                let mut twos = 0u32;
                let mut fives = 0u32;
                while (&den % BigInt::from(2u32)).is_zero() {
                    den /= 2;
                    twos += 1;
                }
                while (&den % BigInt::from(5u32)).is_zero() {
                    den /= 5;
                    fives += 1;
                }
                if !den.is_one() {
                    return write!(f, "{}/{}", r.numer(), r.denom());
                }
                let places = twos.max(fives);
                if places == 0 {
                    return write!(f, "{}", r.numer());
                }
                let scale =
                    BigInt::from(2u32).pow(places - twos) * BigInt::from(5u32).pow(places - fives);
                let digits = (r.numer().abs() * scale).to_string();
                let digits = format!("{:0>width$}", digits, width = places as usize + 1);
                let split = digits.len() - places as usize;
                let sign = if r.is_negative() { "-" } else { "" };
                // The fractional part never ends in zero: the numerator is
                // coprime with the denominator, so the scaled digits are not
                // divisible by ten.
                write!(f, "{}{}.{}", sign, &digits[..split], &digits[split..])
            }
        }
    }
}

impl Serialize for CanonicalAnswer {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Pulls the final answer out of free-form solution text.
///
/// Priority: the contents of the last brace-balanced `\boxed{...}` group,
/// then the text after the last answer cue, then the last number-like token,
/// then the trimmed input itself.
pub fn extract_answer(text: &str) -> &str {
    extract_answer_with_cues(text, &DEFAULT_ANSWER_CUES)
}

/// [`extract_answer`] with a custom cue list replacing the defaults.
pub fn extract_answer_with_cues<'a>(text: &'a str, cues: &[impl AsRef<str>]) -> &'a str {
    if let Some(content) = last_boxed_content(text) {
        return content;
    }
    if let Some(rest) = after_last_cue(text, cues) {
        return rest;
    }
    if let Some(token) = last_number_token(text) {
        return token;
    }
    text.trim()
}

fn last_boxed_content(text: &str) -> Option<&str> {
    const MARKER: &str = "\\boxed{";
    let starts: Vec<usize> = text.match_indices(MARKER).map(|(i, _)| i).collect();
    for &start in starts.iter().rev() {
        let open = start + MARKER.len() - 1;
        let mut depth = 0usize;
        for (offset, c) in text[open..].char_indices() {
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        let content = text[open + 1..open + offset].trim();
                        if !content.is_empty() {
                            return Some(content);
                        }
                        break;
                    }
                }
                _ => {}
            }
        }
    }
    None
}

fn after_last_cue<'a>(text: &'a str, cues: &[impl AsRef<str>]) -> Option<&'a str> {
    let mut best_end: Option<usize> = None;
    for cue in cues {
        let cue = cue.as_ref();
        if let Some(at) = rfind_ascii_ci(text, cue) {
            let end = at + cue.len();
            if best_end.map_or(true, |b| end > b) {
                best_end = Some(end);
            }
        }
    }
    let rest = text[best_end?..].trim();
    if rest.is_empty() {
        None
    } else {
        Some(rest)
    }
}

/// Last position where `needle` occurs, compared ASCII-case-insensitively.
/// Any match of an ASCII needle starts and ends on a character boundary, so
/// the returned offset is always safe to slice at.
fn rfind_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.is_empty() || n.len() > h.len() {
        return None;
    }
    (0..=h.len() - n.len())
        .rev()
        .find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

static NUMBER_TOKEN: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?:^|[\s=(\[$€£¥])(-?\d[\d.,]*(?:/\d[\d.,]*)?)").unwrap());

fn last_number_token(text: &str) -> Option<&str> {
    let m = NUMBER_TOKEN.captures_iter(text).last()?.get(1)?;
    let token = m.as_str().trim_end_matches(['.', ',']);
    if token.is_empty() {
        None
    } else {
        Some(token)
    }
}

/// Canonicalizes a raw answer string.
///
/// The numeric path strips currency symbols, outer braces, dollar signs, and
/// trailing periods; handles a trailing `%` by dividing by 100; and parses
/// integers, decimals, thousands-grouped numbers, `a/b` fractions, and
/// `\frac{a}{b}`. With `decimal_comma` a comma between digits is the decimal
/// separator and a period in group-of-three position is a thousands
/// separator. Non-numeric input becomes a normalized [`CanonicalAnswer::Symbolic`].
///
/// A fraction with denominator zero is an error, never a silent symbolic.
pub fn canonicalize(raw: &str, decimal_comma: bool) -> Result<CanonicalAnswer> {
    let mut s = raw.trim();
    loop {
        let before = s;
        s = strip_outer_dollars(s.trim());
        s = strip_outer_braces(s);
        s = strip_currency(s);
        s = s.trim_end_matches('.').trim();
        if s == before {
            break;
        }
    }
    if s.is_empty() {
        return Ok(CanonicalAnswer::Symbolic(normalize_symbolic(raw)));
    }

    let (body, percent) = match s.strip_suffix('%') {
        Some(rest) => (rest.trim_end(), true),
        None => (s, false),
    };

    let parsed = parse_frac_command(body, raw)?
        .or(parse_slash_fraction(body, decimal_comma, raw)?)
        .or_else(|| parse_number(body, decimal_comma));

    match parsed {
        Some(value) => {
            let value = if percent {
                value / BigRational::from_integer(BigInt::from(100))
            } else {
                value
            };
            Ok(CanonicalAnswer::Numeric(value))
        }
        None => Ok(CanonicalAnswer::Symbolic(normalize_symbolic(raw))),
    }
}

/// Semantic answer equality. Numerics compare as exact rationals, symbolics
/// as normalized strings. Across kinds, the symbolic side gets one numeric
/// parse attempt (decimal point convention); if that fails the answers are
/// unequal. For values produced by [`canonicalize`] this is an equivalence
/// relation.
pub fn answers_equal(a: &CanonicalAnswer, b: &CanonicalAnswer) -> bool {
    use CanonicalAnswer::*;
    match (a, b) {
        (Numeric(x), Numeric(y)) => x == y,
        (Symbolic(x), Symbolic(y)) => x == y,
        (Numeric(x), Symbolic(s)) | (Symbolic(s), Numeric(x)) => {
            matches!(canonicalize(s, false), Ok(Numeric(y)) if *x == y)
        }
    }
}

/// How to resolve the decimal-comma convention for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommaPolicy {
    /// Use each language's conventional separator (see
    /// [`LanguageCode::decimal_comma_default`]).
    PerLanguage,
    Always,
    Never,
}

/// Run-level answer-normalization settings: decimal-comma policy and the
/// answer cue list.
#[derive(Debug, Clone)]
pub struct AnswerRules {
    pub comma: CommaPolicy,
    pub cues: Vec<String>,
}

impl Default for AnswerRules {
    fn default() -> Self {
        AnswerRules {
            comma: CommaPolicy::PerLanguage,
            cues: DEFAULT_ANSWER_CUES.iter().map(|c| c.to_string()).collect(),
        }
    }
}

impl AnswerRules {
    pub fn decimal_comma_for(&self, language: &LanguageCode) -> bool {
        match self.comma {
            CommaPolicy::PerLanguage => language.decimal_comma_default(),
            CommaPolicy::Always => true,
            CommaPolicy::Never => false,
        }
    }

    /// Extraction followed by canonicalization under this rule set.
    pub fn canonical_answer(
        &self,
        raw: &str,
        language: &LanguageCode,
    ) -> Result<CanonicalAnswer> {
        let extracted = extract_answer_with_cues(raw, &self.cues);
        canonicalize(extracted, self.decimal_comma_for(language))
    }

    /// Like [`AnswerRules::canonical_answer`], but an answer that cannot
    /// canonicalize (a zero denominator, in practice) falls back to its
    /// symbolic form instead of failing. Selection and scoring paths use
    /// this so one malformed candidate answer cannot abort a whole run.
    pub fn canonical_answer_lossy(&self, raw: &str, language: &LanguageCode) -> CanonicalAnswer {
        self.canonical_answer(raw, language).unwrap_or_else(|_| {
            CanonicalAnswer::Symbolic(normalize_symbolic(extract_answer_with_cues(
                raw, &self.cues,
            )))
        })
    }
}

fn strip_outer_dollars(s: &str) -> &str {
    let mut s = s;
    while s.len() >= 2 && s.starts_with('$') && s.ends_with('$') {
        s = &s[1..s.len() - 1];
    }
    s
}

fn strip_outer_braces(s: &str) -> &str {
    let mut s = s;
    loop {
        if !(s.starts_with('{') && s.ends_with('}')) {
            return s;
        }
        // Strip only if the closing brace of the first character is the last
        // character, so "{a}{b}" stays intact.
        let mut depth = 0usize;
        let mut closes_at_end = false;
        for (i, c) in s.char_indices() {
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        closes_at_end = i == s.len() - 1;
                        break;
                    }
                }
                _ => {}
            }
        }
        if !closes_at_end {
            return s;
        }
        s = &s[1..s.len() - 1];
    }
}

const CURRENCY: [char; 6] = ['$', '€', '£', '¥', '₹', '￥'];

fn strip_currency(s: &str) -> &str {
    s.trim_matches(|c| CURRENCY.contains(&c)).trim()
}

static FRAC_COMMAND: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^(-?)\\frac\{(-?\d+)\}\{(-?\d+)\}$").unwrap());

fn parse_frac_command(s: &str, raw: &str) -> Result<Option<BigRational>> {
    let caps = match FRAC_COMMAND.captures(s) {
        Some(c) => c,
        None => return Ok(None),
    };
    let numer: BigInt = caps[2].parse().expect("digits");
    let denom: BigInt = caps[3].parse().expect("digits");
    if denom.is_zero() {
        return Err(Error::ZeroDenominator { raw: raw.to_string() });
    }
    let value = BigRational::new(numer, denom);
    Ok(Some(if caps[1].is_empty() { value } else { -value }))
}

fn parse_slash_fraction(s: &str, decimal_comma: bool, raw: &str) -> Result<Option<BigRational>> {
    if s.matches('/').count() != 1 {
        return Ok(None);
    }
    let (left, right) = s.split_once('/').unwrap();
    let numer = match parse_number(left.trim(), decimal_comma) {
        Some(n) => n,
        None => return Ok(None),
    };
    let denom = match parse_number(right.trim(), decimal_comma) {
        Some(d) => d,
        None => return Ok(None),
    };
    if denom.is_zero() {
        return Err(Error::ZeroDenominator { raw: raw.to_string() });
    }
    Ok(Some(numer / denom))
}

static GROUPED_POINT: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^-?\d{1,3}(?:,\d{3})+(?:\.\d+)?$").unwrap());
static PLAIN_POINT: Lazy<Regex> = Lazy::new(|| Regex::new(r"^-?\d+(?:\.\d+)?$").unwrap());
static BARE_POINT: Lazy<Regex> = Lazy::new(|| Regex::new(r"^-?\.\d+$").unwrap());
static GROUPED_COMMA: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^-?\d{1,3}(?:\.\d{3})+(?:,\d+)?$").unwrap());
static PLAIN_COMMA: Lazy<Regex> = Lazy::new(|| Regex::new(r"^-?\d+(?:,\d+)?$").unwrap());

/// Parses a bare number under the given separator convention. Grouping must
/// be in exact groups of three; anything else fails to the symbolic path.
pub(crate) fn parse_number(s: &str, decimal_comma: bool) -> Option<BigRational> {
    if decimal_comma {
        if GROUPED_COMMA.is_match(s) {
            return decimal_value(&s.replace('.', "").replace(',', "."));
        }
        if PLAIN_COMMA.is_match(s) {
            return decimal_value(&s.replace(',', "."));
        }
        // A period-decimal form is unambiguous when no comma is present.
        if PLAIN_POINT.is_match(s) || BARE_POINT.is_match(s) {
            return decimal_value(s);
        }
        None
    } else {
        if GROUPED_POINT.is_match(s) {
            return decimal_value(&s.replace(',', ""));
        }
        if PLAIN_POINT.is_match(s) || BARE_POINT.is_match(s) {
            return decimal_value(s);
        }
        None
    }
}

/// `s` is a validated decimal numeral with an optional sign and point.
fn decimal_value(s: &str) -> Option<BigRational> {
    let (negative, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    let mut numer: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    if negative {
        numer = -numer;
    }
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(BigRational::new(numer, denom))
}

fn normalize_symbolic(raw: &str) -> String {
    let mut s = raw.trim();
    loop {
        let before = s;
        s = s.trim_matches('$').trim();
        s = strip_outer_braces(s);
        if s == before {
            break;
        }
    }
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}
