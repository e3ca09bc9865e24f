//! Intra-slice MAC schedulers.
//!
//! All three allocate PRB by PRB. A UE stays eligible for another PRB while
//! the capacity already granted to it this TTI is below its buffered bits.
//! Ties go to the lowest position in the slice's UE list (UE lists are kept
//! sorted by id).

use super::types::SchedulerKind;

/// EWMA factor for the proportional-fair average rate.
pub const PF_EWMA_FACTOR: f64 = 1.0 / 100.0;

const PF_RATE_FLOOR: f64 = 1e-9;

/// What a scheduler needs to know about one UE for the current TTI.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UeDemand {
    /// Bits waiting in the buffer.
    pub buffer_bits: f64,
    /// Deliverable bits per PRB this TTI (efficiency times fading).
    pub bits_per_prb: f64,
    /// Proportional-fair average served rate, bits per TTI.
    pub avg_rate: f64,
}

impl UeDemand {
    fn backlogged(&self, granted: u32) -> bool {
        self.buffer_bits > 0.0 && (granted as f64) * self.bits_per_prb < self.buffer_bits
    }
}

/// Per-UE PRB grants for one slice in one TTI.
///
/// `rr_pointer` is the slice's round-robin position and persists across TTIs;
/// only [`SchedulerKind::RR`] moves it.
pub fn schedule_slice(
    kind: SchedulerKind,
    ues: &[UeDemand],
    n_prbs: u32,
    rr_pointer: &mut usize,
) -> Vec<u32> {
    let mut grants = vec![0u32; ues.len()];
    if ues.is_empty() {
        return grants;
    }
    for _ in 0..n_prbs {
        let pick = match kind {
            SchedulerKind::RR => pick_round_robin(ues, &grants, rr_pointer),
            SchedulerKind::WF => pick_waterfill(ues, &grants),
            SchedulerKind::PF => pick_proportional_fair(ues, &grants),
        };
        match pick {
            Some(i) => grants[i] += 1,
            None => break,
        }
    }
    grants
}

fn pick_round_robin(ues: &[UeDemand], grants: &[u32], pointer: &mut usize) -> Option<usize> {
    let n = ues.len();
    let start = *pointer % n;
    let i = (0..n)
        .map(|k| (start + k) % n)
        .find(|&i| ues[i].backlogged(grants[i]))?;
    *pointer = (i + 1) % n;
    Some(i)
}

fn pick_waterfill(ues: &[UeDemand], grants: &[u32]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, ue) in ues.iter().enumerate() {
        if !ue.backlogged(grants[i]) {
            continue;
        }
        let allocated = grants[i] as f64 * ue.bits_per_prb;
        if best.is_none_or(|(_, b)| allocated < b) {
            best = Some((i, allocated));
        }
    }
    best.map(|(i, _)| i)
}

fn pick_proportional_fair(ues: &[UeDemand], grants: &[u32]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, ue) in ues.iter().enumerate() {
        if !ue.backlogged(grants[i]) {
            continue;
        }
        let metric = ue.bits_per_prb / ue.avg_rate.max(PF_RATE_FLOOR);
        if best.is_none_or(|(_, b)| metric > b) {
            best = Some((i, metric));
        }
    }
    best.map(|(i, _)| i)
}

/// One EWMA step of the proportional-fair average.
pub fn pf_ewma_update(avg: f64, served_bits: f64) -> f64 {
    (1.0 - PF_EWMA_FACTOR) * avg + PF_EWMA_FACTOR * served_bits
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(bits_per_prb: f64) -> UeDemand {
        UeDemand {
            buffer_bits: 1e12,
            bits_per_prb,
            avg_rate: 1.0,
        }
    }

    fn empty() -> UeDemand {
        UeDemand {
            buffer_bits: 0.0,
            bits_per_prb: 350.0,
            avg_rate: 1.0,
        }
    }

    #[test]
    fn round_robin_splits_evenly() {
        let mut ptr = 0;
        let g = schedule_slice(SchedulerKind::RR, &[full(350.0), full(350.0)], 10, &mut ptr);
        assert_eq!(g, vec![5, 5]);
    }

    #[test]
    fn round_robin_pointer_persists_across_ttis() {
        let mut ptr = 0;
        let ues = [full(350.0), full(350.0)];
        let a = schedule_slice(SchedulerKind::RR, &ues, 5, &mut ptr);
        let b = schedule_slice(SchedulerKind::RR, &ues, 5, &mut ptr);
        assert_eq!(a, vec![3, 2]);
        assert_eq!(b, vec![2, 3]);
    }

    #[test]
    fn no_work_no_grants() {
        for kind in SchedulerKind::ALL {
            let mut ptr = 0;
            assert_eq!(schedule_slice(kind, &[empty(), empty()], 10, &mut ptr), vec![0, 0]);
        }
    }

    #[test]
    fn grants_stop_at_demand() {
        // 700 bits of demand at 350 bits/PRB needs exactly 2 PRBs.
        let small = UeDemand {
            buffer_bits: 700.0,
            bits_per_prb: 350.0,
            avg_rate: 1.0,
        };
        for kind in SchedulerKind::ALL {
            let mut ptr = 0;
            let g = schedule_slice(kind, &[small, empty()], 10, &mut ptr);
            assert_eq!(g, vec![2, 0], "{kind}");
        }
    }

    #[test]
    fn waterfill_equalizes_capacity() {
        let mut ptr = 0;
        // UE0 gets 100 bits/PRB, UE1 gets 300: max-min fill favours UE0 in PRB count.
        let g = schedule_slice(SchedulerKind::WF, &[full(100.0), full(300.0)], 8, &mut ptr);
        assert_eq!(g, vec![6, 2]);
    }

    #[test]
    fn proportional_fair_prefers_low_average() {
        let mut ptr = 0;
        let a = UeDemand {
            avg_rate: 1000.0,
            ..full(350.0)
        };
        let b = UeDemand {
            avg_rate: 10.0,
            ..full(350.0)
        };
        let g = schedule_slice(SchedulerKind::PF, &[a, b], 10, &mut ptr);
        assert_eq!(g, vec![0, 10]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut ptr = 0;
        let g = schedule_slice(SchedulerKind::PF, &[full(350.0), full(350.0)], 1, &mut ptr);
        assert_eq!(g, vec![1, 0]);
        let g = schedule_slice(SchedulerKind::WF, &[full(350.0), full(350.0)], 1, &mut ptr);
        assert_eq!(g, vec![1, 0]);
    }
}
