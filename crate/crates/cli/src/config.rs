//! Run settings: the global flags, the optional JSON settings file, and the
//! precedence between them. Flags win over the file, the file over the
//! built-in defaults; `--jobs` additionally honors the `PRMV_JOBS`
//! environment variable between flag and file.
//!
//! Every command that writes a primary output also writes the settings it
//! actually ran with next to it, so results stay auditable after the fact.

use crate::util::{pretty_json, read_to_string, write_file, CliError};
use prmv_core::{AnswerRules, CommaPolicy, NeutralPolicy, DEFAULT_ANSWER_CUES};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Disagreement threshold used by first-error analysis when neither the
/// `--theta` flag nor the settings file gives one.
pub const DEFAULT_THETA: f64 = 0.5;

/// Flags accepted by every subcommand.
#[derive(Debug, Default, clap::Args)]
pub struct GlobalArgs {
    /// Worker threads for data-parallel commands; falls back to the
    /// PRMV_JOBS environment variable, then to the machine's parallelism.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// JSON settings file. Flags given on the command line win over it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Decimal-comma handling in answers: auto (per language), always, or
    /// never.
    #[arg(long, global = true, value_name = "MODE")]
    pub decimal_comma: Option<String>,

    /// Marker that introduces a final answer (repeatable). Giving any
    /// replaces the built-in list.
    #[arg(long = "cue", global = true, value_name = "TEXT")]
    pub cues: Vec<String>,

    /// How to fold neutral step labels at load time: correct or incorrect.
    #[arg(long, global = true, value_name = "LABEL")]
    pub neutral_as: Option<String>,
}

/// Shape of the `--config` file. Every field is optional; unknown keys are
/// rejected so typos fail loudly instead of being ignored.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    jobs: Option<usize>,
    decimal_comma: Option<String>,
    cues: Option<Vec<String>>,
    theta: Option<f64>,
    neutral_as: Option<String>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub jobs: usize,
    pub comma: CommaPolicy,
    pub cues: Vec<String>,
    pub theta: f64,
    pub neutral: NeutralPolicy,
}

impl RunConfig {
    pub fn rules(&self) -> AnswerRules {
        AnswerRules {
            comma: self.comma,
            cues: self.cues.clone(),
        }
    }

    /// JSON echo of the settings the run actually used.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "jobs": self.jobs,
            "decimal_comma": comma_name(self.comma),
            "cues": self.cues,
            "theta": self.theta,
            "neutral_as": neutral_name(self.neutral),
        })
    }
}

fn comma_name(policy: CommaPolicy) -> &'static str {
    match policy {
        CommaPolicy::PerLanguage => "auto",
        CommaPolicy::Always => "always",
        CommaPolicy::Never => "never",
    }
}

fn neutral_name(policy: NeutralPolicy) -> &'static str {
    match policy {
        NeutralPolicy::Correct => "correct",
        NeutralPolicy::Incorrect => "incorrect",
    }
}

fn parse_comma(raw: &str) -> Result<CommaPolicy, CliError> {
    match raw {
        "auto" => Ok(CommaPolicy::PerLanguage),
        "always" => Ok(CommaPolicy::Always),
        "never" => Ok(CommaPolicy::Never),
        other => Err(CliError::Validation(format!(
            "unknown decimal-comma mode {other:?}, expected auto, always, or never"
        ))),
    }
}

fn parse_neutral(raw: &str) -> Result<NeutralPolicy, CliError> {
    match raw {
        "correct" => Ok(NeutralPolicy::Correct),
        "incorrect" => Ok(NeutralPolicy::Incorrect),
        other => Err(CliError::Validation(format!(
            "unknown neutral policy {other:?}, expected correct or incorrect"
        ))),
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Resolves flags, environment, settings file, and defaults into one
/// [`RunConfig`]. `theta_flag` carries the per-command `--theta` value for
/// the command that has one.
pub fn resolve(globals: &GlobalArgs, theta_flag: Option<f64>) -> Result<RunConfig, CliError> {
    let file = match &globals.config {
        Some(path) => {
            let text = read_to_string(path)?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let env_jobs = std::env::var("PRMV_JOBS")
        .ok()
        .map(|raw| raw.trim().to_string())
        .filter(|raw| !raw.is_empty());
    let jobs = match (globals.jobs, env_jobs) {
        (Some(jobs), _) => jobs,
        (None, Some(raw)) => raw.parse().map_err(|_| {
            CliError::Validation(format!("PRMV_JOBS must be a positive integer, got {raw:?}"))
        })?,
        (None, None) => file.jobs.unwrap_or_else(default_jobs),
    };
    if jobs == 0 {
        return Err(CliError::Validation("jobs must be at least 1".into()));
    }

    let comma = match globals.decimal_comma.as_deref().or(file.decimal_comma.as_deref()) {
        Some(raw) => parse_comma(raw)?,
        None => CommaPolicy::PerLanguage,
    };

    let cues = if !globals.cues.is_empty() {
        globals.cues.clone()
    } else if let Some(cues) = file.cues {
        cues
    } else {
        DEFAULT_ANSWER_CUES.iter().map(|c| c.to_string()).collect()
    };
    if cues.is_empty() || cues.iter().any(|cue| cue.is_empty()) {
        return Err(CliError::Validation("answer cues must be non-empty".into()));
    }

    let theta = theta_flag.or(file.theta).unwrap_or(DEFAULT_THETA);

    let neutral = match globals.neutral_as.as_deref().or(file.neutral_as.as_deref()) {
        Some(raw) => parse_neutral(raw)?,
        None => NeutralPolicy::Correct,
    };

    Ok(RunConfig { jobs, comma, cues, theta, neutral })
}

/// Writes the resolved-settings echo next to `out` as `<out>.config.json`.
pub fn write_sidecar(out: &Path, config: &RunConfig) -> Result<(), CliError> {
    let mut name = out.as_os_str().to_owned();
    name.push(".config.json");
    write_file(Path::new(&name), &pretty_json(&config.to_json()))
}
