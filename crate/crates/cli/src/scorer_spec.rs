//! The `--scorer` argument grammar:
//!
//! - `mock` or `mock:<seed>`: the deterministic hash scorer
//! - `file:<path>`: replay scores recorded by `score`
//! - `toy:<path>`: a model trained by `train-toy`
//! - `remote:<url>[,<timeout_ms>[,<retries>[,<max_inflight>]]]`: a scoring
//!   service
//!
//! Parsing is pure; [`ScorerSpec::build`] does whatever I/O the backend
//! needs, so spelling mistakes are caught before any file is read.

use crate::util::{core_error, core_error_at, CliError};
use prmv_core::{
    FileScorer, MockScorer, RemoteScorer, RemoteScorerConfig, Scorer, ToyScorerModel,
};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub enum ScorerSpec {
    Mock { seed: u64 },
    File { path: PathBuf },
    Toy { path: PathBuf },
    Remote { config: RemoteScorerConfig },
}

const GRAMMAR: &str =
    "expected mock[:seed], file:<path>, toy:<path>, or remote:<url>[,timeout_ms[,retries[,max_inflight]]]";

impl ScorerSpec {
    pub fn parse(raw: &str) -> Result<ScorerSpec, CliError> {
        if raw == "mock" {
            return Ok(ScorerSpec::Mock { seed: 0 });
        }
        if let Some(seed) = raw.strip_prefix("mock:") {
            let seed = seed
                .parse()
                .map_err(|_| invalid(raw, "seed must be an unsigned integer"))?;
            return Ok(ScorerSpec::Mock { seed });
        }
        if let Some(path) = raw.strip_prefix("file:") {
            return nonempty_path(raw, path).map(|path| ScorerSpec::File { path });
        }
        if let Some(path) = raw.strip_prefix("toy:") {
            return nonempty_path(raw, path).map(|path| ScorerSpec::Toy { path });
        }
        if let Some(rest) = raw.strip_prefix("remote:") {
            return parse_remote(raw, rest);
        }
        Err(invalid(raw, GRAMMAR))
    }

    /// Instantiates the scorer. File-backed scorers load here; the remote
    /// scorer only validates its settings and connects per request.
    pub fn build(&self) -> Result<Box<dyn Scorer>, CliError> {
        match self {
            ScorerSpec::Mock { seed } => Ok(Box::new(MockScorer::new(*seed))),
            ScorerSpec::File { path } => Ok(Box::new(
                FileScorer::from_path(path).map_err(core_error_at(path))?,
            )),
            ScorerSpec::Toy { path } => Ok(Box::new(
                ToyScorerModel::load(path).map_err(core_error_at(path))?,
            )),
            ScorerSpec::Remote { config } => {
                Ok(Box::new(RemoteScorer::new(config.clone()).map_err(core_error)?))
            }
        }
    }
}

fn invalid(raw: &str, why: &str) -> CliError {
    CliError::Validation(format!("bad scorer spec {raw:?}: {why}"))
}

fn nonempty_path(raw: &str, path: &str) -> Result<PathBuf, CliError> {
    if path.is_empty() {
        Err(invalid(raw, "path is empty"))
    } else {
        Ok(PathBuf::from(path))
    }
}

fn parse_remote(raw: &str, rest: &str) -> Result<ScorerSpec, CliError> {
    let parts: Vec<&str> = rest.split(',').collect();
    if parts.len() > 4 {
        return Err(invalid(raw, "at most url, timeout_ms, retries, and max_inflight"));
    }
    if parts[0].is_empty() {
        return Err(invalid(raw, "url is empty"));
    }
    let mut config = RemoteScorerConfig::new(parts[0]);
    if let Some(value) = parts.get(1) {
        config.timeout_ms = value
            .parse()
            .map_err(|_| invalid(raw, "timeout_ms must be an unsigned integer"))?;
    }
    if let Some(value) = parts.get(2) {
        config.retries = value
            .parse()
            .map_err(|_| invalid(raw, "retries must be an unsigned integer"))?;
    }
    if let Some(value) = parts.get(3) {
        config.max_inflight = value
            .parse()
            .map_err(|_| invalid(raw, "max_inflight must be an unsigned integer"))?;
    }
    Ok(ScorerSpec::Remote { config })
}
