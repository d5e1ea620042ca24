//! Seeded synthetic-scene harness: scene and embedding generation,
//! experiment runners for the three mechanism-level claims, configuration,
//! and report emission.

pub mod config;
pub mod embed;
pub mod experiments;
pub mod report;
pub mod rng;
pub mod scene;

pub use config::ExperimentConfig;
pub use embed::{embed_scene, interaction_tokens, EmbeddingModel, SceneEmbedding};
pub use experiments::{
    run_distill_experiment, run_infusion_experiment, run_selection_experiment, teacher_edges,
    thread_pool, threads_from_env, DistillReport, InfusionReport, SelectionReport,
};
pub use report::{emit_report, ReportFormat};
pub use scene::{gen_scene, SceneInstance, SyntheticScene};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("unknown category '{0}'")]
    UnknownCategory(String),
    #[error("unsupported report format '{0}'")]
    UnsupportedFormat(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
