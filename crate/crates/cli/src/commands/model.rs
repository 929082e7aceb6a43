//! Model commands: `train-toy` and `gradcheck`.

use crate::config::{write_sidecar, RunConfig};
use crate::util::{core_error, core_error_at, pretty_json, write_file, CliError};
use prmv_core::{gradient_check, ToyScorerModel, TrainConfig, DEFAULT_GRADCHECK_STEP};
use std::path::PathBuf;

#[derive(Debug, clap::Args)]
pub struct TrainToyArgs {
    /// Labeled training corpus (JSONL).
    #[arg(long, value_name = "PATH")]
    pub train: PathBuf,

    /// Passes over the corpus.
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,

    /// Gradient step size.
    #[arg(long, value_name = "F")]
    pub lr: Option<f64>,

    /// Examples per gradient update.
    #[arg(long, value_name = "N")]
    pub batch: Option<usize>,

    /// Feature dimension; must be a power of two.
    #[arg(long, value_name = "N")]
    pub dim: Option<usize>,

    /// Seed of the feature hash.
    #[arg(long, value_name = "SEED")]
    pub hash_seed: Option<u64>,

    /// Seed of the weight initialization.
    #[arg(long, value_name = "SEED")]
    pub init_seed: Option<u64>,

    /// Seed of the per-epoch example shuffle.
    #[arg(long, value_name = "SEED")]
    pub shuffle_seed: Option<u64>,

    /// Where to save the trained model (JSON).
    #[arg(long, value_name = "PATH")]
    pub out_model: PathBuf,

    /// Optional per-epoch loss trace (JSON).
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

pub fn train_toy(config: &RunConfig, args: &TrainToyArgs) -> Result<(), CliError> {
    let instances = super::load_training(&args.train, config)?;
    let defaults = TrainConfig::default();
    let train_config = TrainConfig {
        epochs: args.epochs.unwrap_or(defaults.epochs),
        learning_rate: args.lr.unwrap_or(defaults.learning_rate),
        batch_size: args.batch.unwrap_or(defaults.batch_size),
        dim: args.dim.unwrap_or(defaults.dim),
        hash_seed: args.hash_seed.unwrap_or(defaults.hash_seed),
        init_seed: args.init_seed.unwrap_or(defaults.init_seed),
        shuffle_seed: args.shuffle_seed.unwrap_or(defaults.shuffle_seed),
    };
    let result = prmv_core::train_toy(&instances, &train_config).map_err(core_error)?;
    result
        .model
        .save(&args.out_model)
        .map_err(core_error_at(&args.out_model))?;
    if let Some(path) = &args.trace {
        let trace = serde_json::json!({ "loss_trace": result.loss_trace });
        write_file(path, &pretty_json(&trace))?;
    }
    write_sidecar(&args.out_model, config)
}

#[derive(Debug, clap::Args)]
pub struct GradcheckArgs {
    /// Saved model to check (JSON).
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,

    /// Labeled instances to evaluate the gradients on (JSONL).
    #[arg(long, value_name = "PATH")]
    pub instances: PathBuf,

    /// Finite-difference step size.
    #[arg(long, value_name = "H")]
    pub step_size: Option<f64>,
}

pub fn gradcheck(config: &RunConfig, args: &GradcheckArgs) -> Result<(), CliError> {
    let model = ToyScorerModel::load(&args.model).map_err(core_error_at(&args.model))?;
    let instances = super::load_training(&args.instances, config)?;
    let step_size = args.step_size.unwrap_or(DEFAULT_GRADCHECK_STEP);
    let report = gradient_check(&model, &instances, step_size).map_err(core_error)?;
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!(
        "max relative error {:.3e} over {} coordinates: {verdict}",
        report.max_relative_error, report.coordinates_checked
    );
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "gradient check failed with max relative error {:.3e}",
            report.max_relative_error
        )))
    }
}
