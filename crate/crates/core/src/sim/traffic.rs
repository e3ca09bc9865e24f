use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::types::{TrafficKind, TrafficProfile, TTI_SECONDS};

/// Arrival process of one UE. Keeps its own clock so that successive calls
/// cover consecutive, non-overlapping TTI ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficSource {
    profile: TrafficProfile,
    /// TTIs already generated.
    clock_tti: u64,
    /// Arrival time (seconds) of the next packet.
    next_arrival_s: f64,
    /// CBR only: index of the next packet, so arrival k lands at k * spacing.
    cbr_index: u64,
}

impl TrafficSource {
    pub fn new<R: Rng + ?Sized>(profile: TrafficProfile, rng: &mut R) -> Self {
        let mut src = TrafficSource {
            profile,
            clock_tti: 0,
            next_arrival_s: 0.0,
            cbr_index: 1,
        };
        src.next_arrival_s = match profile.kind {
            TrafficKind::Cbr => profile.mean_interarrival_s(),
            TrafficKind::Poisson => src.exp_gap(rng),
        };
        src
    }

    pub fn profile(&self) -> &TrafficProfile {
        &self.profile
    }

    fn exp_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let lambda = 1.0 / self.profile.mean_interarrival_s();
        Exp::new(lambda).expect("rate validated positive").sample(rng)
    }

    /// Packets (sizes in bytes) arriving during the next `dt` TTIs.
    ///
    /// A packet arriving at time `t` belongs to the TTI covering `(k, k+1]` ms
    /// with `t` in it, so arrivals exactly on a boundary count toward the
    /// earlier TTI.
    pub fn generate<R: Rng + ?Sized>(&mut self, dt: u64, rng: &mut R) -> Vec<u32> {
        let mut out = Vec::new();
        if dt == 0 {
            return out;
        }
        self.clock_tti += dt;
        let horizon = self.clock_tti as f64 * TTI_SECONDS;
        // Tolerance absorbs the rounding in k * spacing for CBR arrivals that
        // sit exactly on a TTI boundary.
        let horizon = horizon + 1e-12;
        while self.next_arrival_s <= horizon {
            out.push(self.profile.packet_size);
            self.next_arrival_s = match self.profile.kind {
                TrafficKind::Cbr => {
                    self.cbr_index += 1;
                    self.cbr_index as f64 * self.profile.mean_interarrival_s()
                }
                TrafficKind::Poisson => self.next_arrival_s + self.exp_gap(rng),
            };
        }
        out
    }
}
