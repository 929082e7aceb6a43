//! Verification of multi-step math solutions with process reward models.
//!
//! The pipeline this crate covers, end to end:
//!
//! 1. **Corpus handling** ([`datasets`]): load step-labeled training data and
//!    candidate solutions from JSONL, check translated corpora against their
//!    sources with the math-token consistency filter, and build seeded
//!    language mixtures.
//! 2. **Segmentation** ([`segment`]): split generated text into steps by
//!    `Step k:` markers or blank lines, with character-exact spans.
//! 3. **Answers** ([`answers`]): extract final answers and compare them as
//!    exact rationals, decimal-comma conventions included.
//! 4. **Scoring** ([`scorers`]): the [`Scorer`](scorers::Scorer) trait with
//!    mock, file-replay, remote-HTTP, and trainable toy implementations,
//!    plus the outcome- and process-level losses.
//! 5. **Selection** ([`verify`]): best-of-N over candidate sets with
//!    baseline, self-consistency, outcome-reward, and process-reward
//!    strategies.
//! 6. **Evaluation** ([`metrics`]): per-language accuracy, seen/unseen macro
//!    averages, best-of-N curves, and first-error analysis.
//! 7. **Reward emission** ([`rlrewards`]): per-step reward events at
//!    character offsets for RL consumers.
//!
//! Everything is deterministic: all randomness flows through explicit seeds,
//! emitted files carry no timestamps, and equal inputs produce byte-equal
//! outputs.

pub mod answers;
pub mod datasets;
pub mod domain;
pub mod error;
pub mod lang;
pub mod metrics;
pub mod rlrewards;
pub mod scorers;
pub mod segment;
pub mod verify;

pub use answers::{
    answers_equal, canonicalize, extract_answer, extract_answer_with_cues, AnswerRules,
    CanonicalAnswer, CommaPolicy, DEFAULT_ANSWER_CUES,
};
pub use datasets::{
    compute_stats, consistency_filter, extract_math_tokens, filter_corpus, load_candidates,
    load_training, make_mixture, training_to_jsonl, ConsistencyReport, DatasetStats,
    FilterDecision, MathTokens, NeutralPolicy, MIXTURE_FILL_LANGUAGES,
};
pub use domain::{CandidateSet, Solution, Source, Step, StepLabel, TrainingInstance};
pub use error::{Error, Result};
pub use lang::{
    classify_language, LanguageCode, Partition, REPORT_LANGUAGE_ORDER, SEEN_LANGUAGES,
    UNSEEN_LANGUAGES,
};
pub use metrics::{
    accuracy, bestofn_curve, bestofn_curve_scored, error_records_to_jsonl, evaluate_sets,
    first_error_analysis, outcome_for, score_candidates, score_first_candidates, CurveResult,
    ErrorBucket, ErrorHistogram, ErrorItem, EvalReport, FirstErrorRecord, LanguageAccuracy,
    MacroAverages, QuestionOutcome,
};
pub use rlrewards::{emit_rewards, emit_rewards_with_pattern, RewardEvent, RewardStream};
pub use scorers::losses::{orm_loss, prm_loss, SCORE_EPSILON};
pub use scorers::remote::{RemoteScorer, RemoteScorerConfig};
pub use scorers::toy::{
    featurize, gradient_check, train_toy, GradCheckReport, ToyScorerModel, TrainConfig,
    TrainResult, DEFAULT_GRADCHECK_STEP, GRADCHECK_TOLERANCE,
};
pub use scorers::{scores_to_jsonl, FileScorer, MockScorer, ScoreRequest, Scorer, StepScores};
pub use segment::{
    canonical_join, segment_steps, segment_steps_spanned, segment_with_pattern, SegmentMode,
    StepSpan,
};
pub use verify::{
    aggregate, candidate_correct, oracle_scores, select, select_bounded, Aggregation, Selection,
    Strategy,
};
