//! Corpus commands: `filter`, `stats`, and `mixture`.

use crate::config::{write_sidecar, RunConfig};
use crate::util::{core_error, pretty_json, write_file, CliError};
use prmv_core::{
    compute_stats, filter_corpus, make_mixture, training_to_jsonl, TrainingInstance,
    MIXTURE_FILL_LANGUAGES,
};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct FilterArgs {
    /// Source-language corpus (JSONL).
    #[arg(long, value_name = "PATH")]
    pub source: PathBuf,

    /// Translated corpus to check against the source (JSONL).
    #[arg(long, value_name = "PATH")]
    pub translation: PathBuf,

    /// Where to write the translations that pass (JSONL).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,

    /// Where to write the decision tally (JSON).
    #[arg(long, value_name = "PATH")]
    pub report: PathBuf,

    /// Optional CSV rendering of the tally.
    #[arg(long, value_name = "PATH")]
    pub report_csv: Option<PathBuf>,
}

pub fn filter(config: &RunConfig, args: &FilterArgs) -> Result<(), CliError> {
    let sources = super::load_training(&args.source, config)?;
    let translations = super::load_training(&args.translation, config)?;
    let rules = config.rules();
    let (kept, report) = filter_corpus(&sources, &translations, &rules).map_err(core_error)?;
    write_file(&args.out, &training_to_jsonl(&kept))?;
    let report_value = serde_json::to_value(report).expect("report always serializes");
    write_file(&args.report, &pretty_json(&report_value))?;
    if let Some(path) = &args.report_csv {
        write_file(path, &report.to_csv())?;
    }
    write_sidecar(&args.out, config)
}

#[derive(Debug, clap::Args)]
pub struct StatsArgs {
    /// Labeled corpus to summarize (JSONL).
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Write the summary as JSON here instead of printing it.
    #[arg(long, value_name = "PATH")]
    pub out_json: Option<PathBuf>,

    /// Write the summary as CSV here.
    #[arg(long, value_name = "PATH")]
    pub out_csv: Option<PathBuf>,
}

pub fn stats(config: &RunConfig, args: &StatsArgs) -> Result<(), CliError> {
    let instances = super::load_training(&args.input, config)?;
    let stats = compute_stats(&instances).map_err(core_error)?;
    if args.out_json.is_none() && args.out_csv.is_none() {
        print!("{}", pretty_json(&stats.to_json()));
        return Ok(());
    }
    if let Some(path) = &args.out_json {
        write_file(path, &pretty_json(&stats.to_json()))?;
    }
    if let Some(path) = &args.out_csv {
        write_file(path, &stats.to_csv())?;
    }
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct MixtureArgs {
    /// Directory holding one `<language>.jsonl` pool per training language.
    #[arg(long, value_name = "DIR")]
    pub pool_dir: PathBuf,

    /// Percent of the budget drawn from the English pool, 0 to 100.
    #[arg(long, value_name = "PCT")]
    pub english_pct: u32,

    /// Total number of instances to sample.
    #[arg(long, value_name = "N")]
    pub budget: usize,

    /// Seed for sampling and the final shuffle.
    #[arg(long, value_name = "SEED")]
    pub seed: u64,

    /// Where to write the mixture (JSONL).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

pub fn mixture(config: &RunConfig, args: &MixtureArgs) -> Result<(), CliError> {
    let mut pools: BTreeMap<String, Vec<TrainingInstance>> = BTreeMap::new();
    for language in std::iter::once("en").chain(MIXTURE_FILL_LANGUAGES) {
        let path = args.pool_dir.join(format!("{language}.jsonl"));
        if path.exists() {
            pools.insert(language.to_string(), super::load_training(&path, config)?);
        }
    }
    let sampled =
        make_mixture(&pools, args.english_pct, args.budget, args.seed).map_err(core_error)?;
    write_file(&args.out, &training_to_jsonl(&sampled))?;
    write_sidecar(&args.out, config)
}
