//! Single-cell TTI simulator: three slices, per-slice MAC schedulers,
//! CBR/Poisson traffic and KPM measurement.

mod bs;
mod scenario;
mod scheduler;
mod traffic;
mod types;

use thiserror::Error;

pub use bs::{BsState, CounterSnapshot, PacketQueue, TtiOutcome, Ue};
pub use scenario::{Scenario, UeConfig, DEFAULT_FADING_RANGE, DEFAULT_SPECTRAL_EFFICIENCY};
pub use scheduler::{pf_ewma_update, schedule_slice, UeDemand, PF_EWMA_FACTOR};
pub use traffic::TrafficSource;
pub use types::{
    PrbPartition, SchedulerAssignment, SchedulerKind, SliceKind, TrafficKind, TrafficProfile,
    MIN_SHARE, PRB_UNIT, TOTAL_PRBS, TTI_SECONDS,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid partition {shares:?}: {reason}")]
    InvalidPartition { shares: [u32; 3], reason: String },
    #[error("control message carries neither a partition nor a scheduler assignment")]
    EmptyControl,
    #[error("invalid traffic profile: {0}")]
    InvalidTraffic(String),
    #[error("unknown slice `{0}`")]
    UnknownSlice(String),
    #[error("empty measurement window [{start}, {end})")]
    EmptyWindow { start: u64, end: u64 },
    #[error("scenario: {0}")]
    Scenario(String),
}
