use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::kpm::KpmSample;
use crate::sim::SliceKind;

/// Per-slice reward weights. `urllc` is a magnitude: the URLLC buffer term
/// is always subtracted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub embb: f64,
    pub mmtc: f64,
    pub urllc: f64,
}

impl RewardWeights {
    pub const DEFAULT: RewardWeights = RewardWeights {
        embb: 72.0440333,
        mmtc: 0.229357798,
        urllc: 0.00005,
    };

    pub const ALTERNATIVE: RewardWeights = RewardWeights {
        embb: 72.0440333,
        mmtc: 1.5,
        urllc: 0.00005,
    };

    pub fn new(embb: f64, mmtc: f64, urllc: f64) -> Result<Self, AgentError> {
        let w = RewardWeights { embb, mmtc, urllc };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        for (name, v) in [("eMBB", self.embb), ("mMTC", self.mmtc), ("URLLC", self.urllc)] {
            if !v.is_finite() || v < 0.0 {
                return Err(AgentError::InvalidWeights(format!(
                    "{name} weight must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Weights from priority scales and per-slice reference KPM values:
/// `alpha/A`, `beta/B`, and `gamma_u/C` for the (negated) URLLC term.
pub fn compute_weights(
    alpha: f64,
    beta: f64,
    gamma_u: f64,
    a: f64,
    b: f64,
    c: f64,
) -> Result<RewardWeights, AgentError> {
    for (name, v) in [("A", a), ("B", b), ("C", c)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(AgentError::NonPositiveReference(name, v));
        }
    }
    RewardWeights::new(alpha / a, beta / b, gamma_u / c)
}

/// Weighted sum of eMBB throughput, mMTC transmitted packets and (negated)
/// URLLC buffer occupancy. `kpms` is indexed by [`SliceKind::index`].
pub fn step_reward(kpms: &[KpmSample; 3], weights: &RewardWeights) -> f64 {
    weights.embb * kpms[SliceKind::Embb.index()].dl_throughput_mbps
        + weights.mmtc * kpms[SliceKind::Mmtc.index()].tx_packets
        - weights.urllc * kpms[SliceKind::Urllc.index()].buffer_bytes
}
