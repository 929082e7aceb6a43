//! Process-level plumbing shared by the commands: the error-to-exit-code
//! split, file I/O with path context in messages, and the ordered parallel
//! runner.

use prmv_core::Error;
use rayon::prelude::*;
use std::fs;
use std::path::Path;

/// A command failure, split by exit code: validation problems exit with 1,
/// I/O problems with 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(message) | CliError::Io(message) => message,
        }
    }
}

/// Maps a library error onto the validation/I-O split.
pub fn core_error(error: Error) -> CliError {
    match error {
        Error::Io(inner) => CliError::Io(inner.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

/// Like [`core_error`], but prefixes the path the operation was touching so
/// the message says which file to look at.
pub fn core_error_at(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |error| match core_error(error) {
        CliError::Validation(message) => {
            CliError::Validation(format!("{}: {message}", path.display()))
        }
        CliError::Io(message) => CliError::Io(format!("{}: {message}", path.display())),
    }
}

pub fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn create_dir_all(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Pretty-printed JSON with a trailing newline, the shape every JSON file
/// this binary writes uses.
pub fn pretty_json(value: &serde_json::Value) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    out.push('\n');
    out
}

/// Runs `op` over `items` on a dedicated pool of `jobs` threads and returns
/// the results in input order. When several items fail, the error reported
/// is the earliest failing item's, independent of completion order, so runs
/// with different thread counts fail identically.
pub fn run_parallel_ordered<T, R, F>(jobs: usize, items: &[T], op: F) -> Result<Vec<R>, CliError>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> prmv_core::Result<R> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Validation(format!("could not start {jobs} worker threads: {e}")))?;
    let results: Vec<prmv_core::Result<R>> = pool.install(|| items.par_iter().map(&op).collect());
    let mut out = Vec::with_capacity(results.len());
    for result in results {
        out.push(result.map_err(core_error)?);
    }
    Ok(out)
}
