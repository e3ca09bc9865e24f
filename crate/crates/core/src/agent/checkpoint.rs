use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::action::ActionSpaceKind;
use super::policy::PolicyParams;
use super::reward::RewardWeights;
use super::AgentError;

pub const POLICY_FORMAT: &str = "slicelab-policy";
pub const POLICY_VERSION: u32 = 1;

/// Self-describing policy file: network shapes live inside the serialized
/// layers, and the training context travels with them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub format: String,
    pub version: u32,
    pub action_space: ActionSpaceKind,
    pub gamma: f64,
    pub weights: RewardWeights,
    pub period_ms: u64,
    /// Path of the encoder file the policy was trained against, relative to
    /// the checkpoint's directory when possible.
    pub encoder: String,
    pub params: PolicyParams,
}

impl PolicyCheckpoint {
    pub fn new(
        params: PolicyParams,
        gamma: f64,
        weights: RewardWeights,
        period_ms: u64,
        encoder: impl Into<String>,
    ) -> Self {
        PolicyCheckpoint {
            format: POLICY_FORMAT.into(),
            version: POLICY_VERSION,
            action_space: params.action_space,
            gamma,
            weights,
            period_ms,
            encoder: encoder.into(),
            params,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), AgentError> {
        let text = serde_json::to_string(self).expect("checkpoint serializes");
        fs::write(path, text).map_err(|e| AgentError::Io(path.display().to_string(), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, AgentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| AgentError::Io(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text).map_err(|e| match e {
            AgentError::Checkpoint(m) => AgentError::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, AgentError> {
        let c: PolicyCheckpoint =
            serde_json::from_str(text).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        if c.format != POLICY_FORMAT || c.version != POLICY_VERSION {
            return Err(AgentError::Checkpoint(format!(
                "unsupported policy file {} v{}",
                c.format, c.version
            )));
        }
        if c.action_space != c.params.action_space {
            return Err(AgentError::Checkpoint("action space does not match the networks".into()));
        }
        c.params.check().map_err(AgentError::Checkpoint)?;
        c.weights.validate()?;
        Ok(c)
    }
}
