use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{
    PrbPartition, SchedulerAssignment, SchedulerKind, SliceKind, TrafficProfile,
};
use super::SimError;

pub const DEFAULT_SPECTRAL_EFFICIENCY: f64 = 350.0;
pub const DEFAULT_FADING_RANGE: (f64, f64) = (0.6, 1.4);

fn default_efficiency() -> f64 {
    DEFAULT_SPECTRAL_EFFICIENCY
}

fn default_fading_range() -> (f64, f64) {
    DEFAULT_FADING_RANGE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UeConfig {
    pub slice: SliceKind,
    pub traffic: TrafficProfile,
    /// Bits per PRB per TTI.
    #[serde(default = "default_efficiency")]
    pub spectral_efficiency: f64,
}

/// One base station's static setup: which UEs exist, what they request, and
/// the channel model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub ues: Vec<UeConfig>,
    /// Per-TTI i.i.d. multiplicative fading, uniform in `fading_range`.
    #[serde(default)]
    pub fading: bool,
    #[serde(default = "default_fading_range")]
    pub fading_range: (f64, f64),
    #[serde(default)]
    pub initial_partition: PrbPartition,
    #[serde(default)]
    pub initial_schedulers: SchedulerAssignment,
}

impl Scenario {
    /// One cell, 50 PRBs, two UEs per slice: eMBB 4 Mbps CBR (1500 B),
    /// mMTC 44.6 kbps Poisson and URLLC 89.3 kbps Poisson (125 B each).
    pub fn paper_default() -> Self {
        let mut ues = Vec::new();
        for _ in 0..2 {
            ues.push(UeConfig {
                slice: SliceKind::Embb,
                traffic: TrafficProfile::cbr(4e6, 1500).unwrap(),
                spectral_efficiency: DEFAULT_SPECTRAL_EFFICIENCY,
            });
        }
        for _ in 0..2 {
            ues.push(UeConfig {
                slice: SliceKind::Mmtc,
                traffic: TrafficProfile::poisson(44_600.0, 125).unwrap(),
                spectral_efficiency: DEFAULT_SPECTRAL_EFFICIENCY,
            });
        }
        for _ in 0..2 {
            ues.push(UeConfig {
                slice: SliceKind::Urllc,
                traffic: TrafficProfile::poisson(89_300.0, 125).unwrap(),
                spectral_efficiency: DEFAULT_SPECTRAL_EFFICIENCY,
            });
        }
        Scenario {
            name: "default".into(),
            ues,
            fading: false,
            fading_range: DEFAULT_FADING_RANGE,
            initial_partition: PrbPartition::default(),
            initial_schedulers: SchedulerAssignment::default(),
        }
    }

    /// The default cell with mMTC turned into a heavy aggregator load
    /// (5 Mbps Poisson per UE) and fading enabled, so that eMBB and mMTC
    /// cannot both be satisfied from 50 PRBs.
    pub fn contended() -> Self {
        let mut s = Self::paper_default();
        s.name = "contended".into();
        s.fading = true;
        for ue in s.ues.iter_mut().filter(|u| u.slice == SliceKind::Mmtc) {
            ue.traffic = TrafficProfile::poisson(5e6, 125).unwrap();
        }
        s
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::paper_default()),
            "contended" => Some(Self::contended()),
            _ => None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = fs::read_to_string(path)
            .map_err(|e| SimError::Scenario(format!("{}: {e}", path.display())))?;
        let s: Scenario = serde_json::from_str(&text)
            .map_err(|e| SimError::Scenario(format!("{}: {e}", path.display())))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for slice in SliceKind::ALL {
            if !self.ues.iter().any(|u| u.slice == slice) {
                return Err(SimError::Scenario(format!("slice {slice} has no UEs")));
            }
        }
        for (i, ue) in self.ues.iter().enumerate() {
            ue.traffic.validated()?;
            if !(ue.spectral_efficiency.is_finite() && ue.spectral_efficiency > 0.0) {
                return Err(SimError::Scenario(format!(
                    "UE {i}: spectral efficiency must be positive"
                )));
            }
        }
        let (lo, hi) = self.fading_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(SimError::Scenario(format!(
                "fading range ({lo}, {hi}) must satisfy 0 < lo <= hi"
            )));
        }
        Ok(())
    }

    /// Offered load of a slice in bits/s, summed over its UEs.
    pub fn offered_bps(&self, slice: SliceKind) -> f64 {
        self.ues
            .iter()
            .filter(|u| u.slice == slice)
            .map(|u| u.traffic.rate_bps)
            .sum()
    }

    pub fn with_scheduler(mut self, slice: SliceKind, kind: SchedulerKind) -> Self {
        self.initial_schedulers.set(slice, kind);
        self
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Self::paper_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_has_two_ues_per_slice() {
        let s = Scenario::paper_default();
        for slice in SliceKind::ALL {
            assert_eq!(s.ues.iter().filter(|u| u.slice == slice).count(), 2);
        }
        assert_eq!(s.offered_bps(SliceKind::Embb), 8e6);
        s.validate().unwrap();
        Scenario::contended().validate().unwrap();
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let text = r#"{
            "name": "tiny",
            "ues": [
                {"slice": "eMBB", "traffic": {"kind": "cbr", "rate_bps": 1e6, "packet_size": 1000}},
                {"slice": "mMTC", "traffic": {"kind": "poisson", "rate_bps": 1e4, "packet_size": 100}},
                {"slice": "URLLC", "traffic": {"kind": "poisson", "rate_bps": 1e4, "packet_size": 100}}
            ]
        }"#;
        let s: Scenario = serde_json::from_str(text).unwrap();
        s.validate().unwrap();
        assert_eq!(s.ues[0].spectral_efficiency, 350.0);
        assert_eq!(s.initial_partition.shares(), [20, 15, 15]);
        let back: Scenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn missing_slice_is_rejected() {
        let mut s = Scenario::paper_default();
        s.ues.retain(|u| u.slice != SliceKind::Urllc);
        assert!(s.validate().is_err());
    }
}
