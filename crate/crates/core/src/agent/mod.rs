//! Reward, action catalogs and a PPO actor-critic trained against the
//! simulator through the KPM encoder.

mod action;
mod checkpoint;
mod env;
mod policy;
mod ppo;
mod returns;
mod reward;
mod train;

use thiserror::Error;

use crate::kpm::KpmError;
use crate::sim::SimError;

pub use action::{ActionSpace, ActionSpaceKind, ControlAction};
pub use checkpoint::{PolicyCheckpoint, POLICY_FORMAT, POLICY_VERSION};
pub use env::{EnvConfig, Observation, SlicingEnv, StepResult};
pub use policy::{
    actor_forward, critic_forward, sample_action, Categorical, PolicyParams, HIDDEN, LEARNING_RATE,
    STATE_DIM,
};
pub use ppo::{
    gae_advantages, gradient_error, loss_and_grads, ppo_update, Batch, LossParts, PpoConfig,
    PpoOptimizer, Step, Trajectory,
};
pub use returns::{discounted_return, discounted_return_bootstrapped, gae, normalize_advantages};
pub use reward::{compute_weights, step_reward, RewardWeights};
pub use train::{train, write_training_curve, CurvePoint, TrainConfig, TrainOutput};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("reference value {0} must be positive, got {1}")]
    NonPositiveReference(&'static str, f64),
    #[error("invalid reward weights: {0}")]
    InvalidWeights(String),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("policy checkpoint: {0}")]
    Checkpoint(String),
    #[error("{0}: {1}")]
    Io(String, String),
    #[error(transparent)]
    Kpm(#[from] KpmError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
