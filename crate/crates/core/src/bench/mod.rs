//! Experiment configs, the comparison matrix, summary statistics and
//! report files.

mod config;
mod oracle;
mod report;
mod run;
mod stats;

use std::path::PathBuf;

use thiserror::Error;

use crate::agent::AgentError;
use crate::kpm::KpmError;
use crate::ric::RicError;
use crate::sim::SimError;

pub use config::{
    hierarchical_name, run_name, EncoderSpec, ExperimentConfig, HierarchicalSpec, MatrixConfig, MatrixHierarchical,
    Mode, NamedWeights, ScenarioRef, TrainSpec, WeightSpec,
};
pub use oracle::{static_partition_medians, static_run, RandomXapp};
pub use report::emit_report;
pub use run::{collect_run_logs, fit_encoder, report_from_dir, run_experiment, run_matrix, MatrixOutcome, RunOutcome};
pub use stats::{
    empirical_cdf, higher_is_better, median, objective_medians, pooled, rank_policies, rank_slice, RankEntry,
    RankingReport, SliceRanking,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no samples")]
    EmptySamples,
    #[error("nothing to report")]
    EmptyReport,
    #[error("no logs found under {0}")]
    NoLogs(PathBuf),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("missing checkpoint {0}")]
    MissingCheckpoint(PathBuf),
    #[error("{0}: {1}")]
    Io(String, String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Ric(#[from] RicError),
    #[error(transparent)]
    Kpm(#[from] KpmError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
