//! Experiment orchestration: data generation, skill pre-training, grounding
//! training and seeded comparisons.

pub mod compare;
pub mod config;
pub mod datagen;
pub mod pipeline;
pub mod plot;
pub mod pretrain;

pub use compare::{run_trial, run_trials, summarize, ComparisonSpec, ComparisonSummary, Method, TrialResult};
pub use config::ExperimentConfig;
pub use datagen::{gen_dataset, grounding_key};
pub use pretrain::{pretrain_puck_skill, PretrainConfig, PretrainReport};
