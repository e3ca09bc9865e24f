use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Total PRBs of the 10 MHz carrier.
pub const TOTAL_PRBS: u32 = 50;
/// Slicing granularity in PRBs.
pub const PRB_UNIT: u32 = 5;
/// Smallest share any slice may receive.
pub const MIN_SHARE: u32 = 5;

/// TTI duration in seconds.
pub const TTI_SECONDS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SliceKind {
    #[serde(rename = "eMBB")]
    Embb,
    #[serde(rename = "mMTC")]
    Mmtc,
    #[serde(rename = "URLLC")]
    Urllc,
}

impl SliceKind {
    pub const ALL: [SliceKind; 3] = [SliceKind::Embb, SliceKind::Mmtc, SliceKind::Urllc];

    pub fn index(self) -> usize {
        match self {
            SliceKind::Embb => 0,
            SliceKind::Mmtc => 1,
            SliceKind::Urllc => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SliceKind::Embb => "eMBB",
            SliceKind::Mmtc => "mMTC",
            SliceKind::Urllc => "URLLC",
        }
    }
}

impl fmt::Display for SliceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SliceKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eMBB" | "embb" => Ok(SliceKind::Embb),
            "mMTC" | "mmtc" => Ok(SliceKind::Mmtc),
            "URLLC" | "urllc" => Ok(SliceKind::Urllc),
            other => Err(SimError::UnknownSlice(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchedulerKind {
    /// Round robin.
    RR,
    /// Waterfilling (max-min fill of allocated capacity).
    WF,
    /// Proportional fair.
    PF,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [SchedulerKind::RR, SchedulerKind::WF, SchedulerKind::PF];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::RR => "RR",
            SchedulerKind::WF => "WF",
            SchedulerKind::PF => "PF",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::Scenario(format!("unknown scheduler `{s}`")))
    }
}

fn split3(s: &str) -> Option<[&str; 3]> {
    let mut it = s.split('/');
    let out = [it.next()?, it.next()?, it.next()?];
    it.next().is_none().then_some(out)
}

/// PRBs per slice, ordered (eMBB, mMTC, URLLC).
///
/// Shares are multiples of [`PRB_UNIT`], each at least [`MIN_SHARE`], and sum
/// to [`TOTAL_PRBS`]. The only way to build one is through [`PrbPartition::new`]
/// (or deserialization, which runs the same check).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u32; 3]", into = "[u32; 3]")]
pub struct PrbPartition([u32; 3]);

impl PrbPartition {
    pub fn new(embb: u32, mmtc: u32, urllc: u32) -> Result<Self, SimError> {
        Self::try_from([embb, mmtc, urllc])
    }

    pub fn share(&self, slice: SliceKind) -> u32 {
        self.0[slice.index()]
    }

    pub fn shares(&self) -> [u32; 3] {
        self.0
    }

    /// Every valid partition, in lexicographic order of (eMBB, mMTC, URLLC).
    pub fn catalog() -> Vec<PrbPartition> {
        let units = TOTAL_PRBS / PRB_UNIT;
        let mut out = Vec::new();
        for a in 1..units {
            for b in 1..(units - a) {
                let c = units - a - b;
                out.push(PrbPartition([a * PRB_UNIT, b * PRB_UNIT, c * PRB_UNIT]));
            }
        }
        out
    }
}

impl Default for PrbPartition {
    fn default() -> Self {
        PrbPartition([20, 15, 15])
    }
}

impl TryFrom<[u32; 3]> for PrbPartition {
    type Error = SimError;

    fn try_from(shares: [u32; 3]) -> Result<Self, Self::Error> {
        let sum: u32 = shares.iter().sum();
        if sum != TOTAL_PRBS {
            return Err(SimError::InvalidPartition {
                shares,
                reason: format!("shares sum to {sum}, expected {TOTAL_PRBS}"),
            });
        }
        if let Some(s) = shares.iter().find(|&&s| s < MIN_SHARE) {
            return Err(SimError::InvalidPartition {
                shares,
                reason: format!("share {s} below minimum {MIN_SHARE}"),
            });
        }
        if let Some(s) = shares.iter().find(|&&s| s % PRB_UNIT != 0) {
            return Err(SimError::InvalidPartition {
                shares,
                reason: format!("share {s} is not a multiple of {PRB_UNIT}"),
            });
        }
        Ok(PrbPartition(shares))
    }
}

impl From<PrbPartition> for [u32; 3] {
    fn from(p: PrbPartition) -> Self {
        p.0
    }
}

impl fmt::Display for PrbPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Parses the `eMBB/mMTC/URLLC` form produced by `Display`.
impl FromStr for PrbPartition {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SimError::Scenario(format!("`{s}` is not a partition like 20/15/15"));
        let [a, b, c] = split3(s).ok_or_else(bad)?;
        let n = |x: &str| x.trim().parse::<u32>().map_err(|_| bad());
        PrbPartition::new(n(a)?, n(b)?, n(c)?)
    }
}

/// Scheduler per slice, ordered (eMBB, mMTC, URLLC).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SchedulerAssignment(pub [SchedulerKind; 3]);

impl SchedulerAssignment {
    pub fn scheduler(&self, slice: SliceKind) -> SchedulerKind {
        self.0[slice.index()]
    }

    pub fn set(&mut self, slice: SliceKind, kind: SchedulerKind) {
        self.0[slice.index()] = kind;
    }

    /// All 27 assignments, eMBB varying slowest.
    pub fn catalog() -> Vec<SchedulerAssignment> {
        let mut out = Vec::with_capacity(27);
        for a in SchedulerKind::ALL {
            for b in SchedulerKind::ALL {
                for c in SchedulerKind::ALL {
                    out.push(SchedulerAssignment([a, b, c]));
                }
            }
        }
        out
    }
}

impl Default for SchedulerAssignment {
    fn default() -> Self {
        SchedulerAssignment([SchedulerKind::RR; 3])
    }
}

impl fmt::Display for SchedulerAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for SchedulerAssignment {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let [a, b, c] = split3(s)
            .ok_or_else(|| SimError::Scenario(format!("`{s}` is not an assignment like RR/PF/WF")))?;
        Ok(SchedulerAssignment([a.trim().parse()?, b.trim().parse()?, c.trim().parse()?]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficKind {
    Cbr,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficProfile {
    pub kind: TrafficKind,
    /// Offered load in bits per second.
    pub rate_bps: f64,
    /// Bytes per packet.
    pub packet_size: u32,
}

impl TrafficProfile {
    pub fn cbr(rate_bps: f64, packet_size: u32) -> Result<Self, SimError> {
        Self {
            kind: TrafficKind::Cbr,
            rate_bps,
            packet_size,
        }
        .validated()
    }

    pub fn poisson(rate_bps: f64, packet_size: u32) -> Result<Self, SimError> {
        Self {
            kind: TrafficKind::Poisson,
            rate_bps,
            packet_size,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, SimError> {
        if !(self.rate_bps.is_finite() && self.rate_bps > 0.0) {
            return Err(SimError::InvalidTraffic(format!(
                "rate must be positive, got {}",
                self.rate_bps
            )));
        }
        if self.packet_size == 0 {
            return Err(SimError::InvalidTraffic("packet size must be positive".into()));
        }
        Ok(self)
    }

    /// Mean seconds between packet arrivals.
    pub fn mean_interarrival_s(&self) -> f64 {
        self.packet_size as f64 * 8.0 / self.rate_bps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_forms_parse_back() {
        for p in PrbPartition::catalog() {
            assert_eq!(p.to_string().parse::<PrbPartition>().unwrap(), p);
        }
        for a in SchedulerAssignment::catalog() {
            assert_eq!(a.to_string().parse::<SchedulerAssignment>().unwrap(), a);
        }
        assert!("30/15/10".parse::<PrbPartition>().is_err());
        assert!("RR/RR".parse::<SchedulerAssignment>().is_err());
    }

    #[test]
    fn partition_examples() {
        assert!(PrbPartition::new(20, 15, 15).is_ok());
        assert!(PrbPartition::new(30, 15, 5).is_ok());
        assert!(PrbPartition::new(30, 15, 10).is_err());
        assert!(matches!(
            PrbPartition::new(40, 10, 5),
            Err(SimError::InvalidPartition { .. })
        ));
        assert!(PrbPartition::new(45, 5, 0).is_err());
        assert!(PrbPartition::new(22, 18, 10).is_err());
    }

    #[test]
    fn catalogs_have_expected_sizes() {
        let parts = PrbPartition::catalog();
        assert_eq!(parts.len(), 36);
        for p in &parts {
            assert!(PrbPartition::try_from(p.shares()).is_ok());
        }
        assert_eq!(SchedulerAssignment::catalog().len(), 27);
    }

    #[test]
    fn partition_deserialization_is_validated() {
        let ok: PrbPartition = serde_json::from_str("[20,15,15]").unwrap();
        assert_eq!(ok.shares(), [20, 15, 15]);
        assert!(serde_json::from_str::<PrbPartition>("[20,20,20]").is_err());
    }

    #[test]
    fn slice_names_round_trip() {
        for s in SliceKind::ALL {
            assert_eq!(s.as_str().parse::<SliceKind>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.as_str()));
        }
    }

    #[test]
    fn traffic_profile_rejects_bad_values() {
        assert!(TrafficProfile::cbr(0.0, 1500).is_err());
        assert!(TrafficProfile::poisson(44_600.0, 0).is_err());
        assert!(TrafficProfile::cbr(f64::NAN, 10).is_err());
    }
}
