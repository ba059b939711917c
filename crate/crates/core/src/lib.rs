//! Probing toolkit for API fully-qualified-name (FQN) knowledge in completion-style
//! code models.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`scanner`] pulls cannot-be-resolved simple names out of partial Java code.
//! 2. [`composer`] renders in-context-learning task inputs for every shot setting
//!    and prompt configuration.
//! 3. [`backend`] sends each task input to a model (HTTP endpoint, lookup oracle,
//!    or a simulated model driven by FQN data-distribution properties) and
//!    [`normalizer`] cleans up the completions.
//! 4. [`evaluator`] scores predictions and stratifies accuracy by FQN length,
//!    usage, and name/FQN cardinalities.
//!
//! [`sampler`] picks a diverse subset of methods from a large corpus, and
//! [`synthetic`] generates Zipfian corpora for simulation runs.

pub mod backend;
pub mod cli;
pub mod composer;
pub mod corpus;
pub mod evaluator;
pub mod normalizer;
pub mod rng;
pub mod sampler;
pub mod scanner;
pub mod synthetic;

pub use backend::{
    CompletionBackend, CompletionRequest, CompletionResult, HttpBackend, HttpConfig, OracleBackend,
    RecallParams, StochasticBackend,
};
pub use composer::{PromptConfig, ShotKind, ShotSetting, TaskInput};
pub use corpus::{CodeSnippet, Corpus, FqnStats, NameKind, NamePair, PropertyBuckets, StatsIndex};
pub use evaluator::{PredictionRecord, StratifiedReport};
pub use normalizer::{normalize_fqn, Prediction, FAILURE_MARKER};
pub use scanner::{extract_simple_names, ScanHit};
