use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::scheduler::{pf_ewma_update, schedule_slice, UeDemand};
use super::traffic::TrafficSource;
use super::types::{PrbPartition, SchedulerAssignment, SliceKind, TTI_SECONDS};
use super::SimError;
use crate::kpm::KpmSample;

/// FIFO of packets; each entry is the number of bytes still to send.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketQueue {
    packets: VecDeque<u32>,
    bytes: u64,
}

impl PacketQueue {
    pub fn push(&mut self, size: u32) {
        self.packets.push_back(size);
        self.bytes += size as u64;
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    /// Sends up to `budget` bytes from the head. Returns (bytes sent, packets
    /// completed). A packet only counts once its last byte is sent.
    pub fn serve(&mut self, budget: u64) -> (u64, u32) {
        let mut left = budget;
        let mut drained = 0;
        while left > 0 {
            let Some(head) = self.packets.front_mut() else {
                break;
            };
            let take = (*head as u64).min(left);
            *head -= take as u32;
            left -= take;
            if *head == 0 {
                self.packets.pop_front();
                drained += 1;
            }
        }
        let sent = budget - left;
        self.bytes -= sent;
        (sent, drained)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ue {
    pub id: usize,
    pub slice: SliceKind,
    pub buffer: PacketQueue,
    /// Bits per PRB per TTI before fading.
    pub spectral_efficiency: f64,
    /// Multiplicative channel factor for the current TTI.
    pub fading_state: f64,
    pub traffic: TrafficSource,
    rng: ChaCha8Rng,
    /// Running totals since reset.
    pub arrived_bytes: u64,
    pub served_bytes: u64,
    pub drained_packets: u64,
}

impl Ue {
    /// Appends the next `dt` TTIs of arrivals to the buffer and returns them.
    pub fn generate_traffic(&mut self, dt: u64) -> Vec<u32> {
        let pkts = self.traffic.generate(dt, &mut self.rng);
        for &p in &pkts {
            self.buffer.push(p);
            self.arrived_bytes += p as u64;
        }
        pkts
    }
}

/// Per-UE cumulative counters at a TTI boundary; the start mark of a KPM
/// measurement window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterSnapshot {
    pub tti: u64,
    served_bytes: Vec<u64>,
    drained_packets: Vec<u64>,
}

/// What happened in one TTI, indexed by UE id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TtiOutcome {
    pub grants: Vec<u32>,
    pub served_bytes: Vec<u64>,
    pub drained_packets: Vec<u32>,
}

impl TtiOutcome {
    pub fn slice_grants(&self, bs: &BsState, slice: SliceKind) -> u32 {
        bs.slice_members(slice).iter().map(|&i| self.grants[i]).sum()
    }
}

/// Base-station state. Two states built from the same scenario and seed and
/// driven by the same control sequence stay equal TTI for TTI.
#[derive(Clone, Debug, PartialEq)]
pub struct BsState {
    pub tti_counter: u64,
    partition: PrbPartition,
    assignment: SchedulerAssignment,
    ues: Vec<Ue>,
    members: [Vec<usize>; 3],
    rr_pointers: [usize; 3],
    pf_ewma: Vec<f64>,
    fading: Option<(f64, f64)>,
    fading_rng: ChaCha8Rng,
}

impl BsState {
    /// Fresh state for the default cell.
    pub fn reset(seed: u64) -> Self {
        Self::new(&Scenario::paper_default(), seed).expect("default scenario is valid")
    }

    pub fn new(scenario: &Scenario, seed: u64) -> Result<Self, SimError> {
        scenario.validate()?;
        let mut ues = Vec::with_capacity(scenario.ues.len());
        let mut members: [Vec<usize>; 3] = Default::default();
        for (id, cfg) in scenario.ues.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id as u64 + 1);
            let traffic = TrafficSource::new(cfg.traffic, &mut rng);
            members[cfg.slice.index()].push(id);
            ues.push(Ue {
                id,
                slice: cfg.slice,
                buffer: PacketQueue::default(),
                spectral_efficiency: cfg.spectral_efficiency,
                fading_state: 1.0,
                traffic,
                rng,
                arrived_bytes: 0,
                served_bytes: 0,
                drained_packets: 0,
            });
        }
        let mut fading_rng = ChaCha8Rng::seed_from_u64(seed);
        fading_rng.set_stream(0);
        let n = ues.len();
        Ok(BsState {
            tti_counter: 0,
            partition: scenario.initial_partition,
            assignment: scenario.initial_schedulers,
            ues,
            members,
            rr_pointers: [0; 3],
            pf_ewma: vec![1.0; n],
            fading: scenario.fading.then_some(scenario.fading_range),
            fading_rng,
        })
    }

    pub fn partition(&self) -> PrbPartition {
        self.partition
    }

    pub fn assignment(&self) -> SchedulerAssignment {
        self.assignment
    }

    pub fn ues(&self) -> &[Ue] {
        &self.ues
    }

    pub fn pf_average(&self, ue: usize) -> f64 {
        self.pf_ewma[ue]
    }

    /// UE ids of a slice, ascending.
    pub fn slice_members(&self, slice: SliceKind) -> &[usize] {
        &self.members[slice.index()]
    }

    /// Replaces the slicing and/or scheduling configuration. The new values
    /// govern every TTI served after this call; whichever argument is `None`
    /// keeps its current value.
    pub fn apply_control(
        &mut self,
        partition: Option<PrbPartition>,
        assignment: Option<SchedulerAssignment>,
    ) -> Result<(), SimError> {
        if partition.is_none() && assignment.is_none() {
            return Err(SimError::EmptyControl);
        }
        if let Some(p) = partition {
            self.partition = p;
        }
        if let Some(a) = assignment {
            self.assignment = a;
        }
        Ok(())
    }

    /// Like [`apply_control`](Self::apply_control) with unvalidated shares, as
    /// they arrive in a control message.
    pub fn apply_control_raw(
        &mut self,
        shares: Option<[u32; 3]>,
        assignment: Option<SchedulerAssignment>,
    ) -> Result<(), SimError> {
        let partition = shares.map(PrbPartition::try_from).transpose()?;
        self.apply_control(partition, assignment)
    }

    /// Advances one TTI: arrivals, channel draw, per-slice scheduling,
    /// transmission, PF averages.
    pub fn serve_tti(&mut self) -> TtiOutcome {
        let n = self.ues.len();
        for ue in &mut self.ues {
            ue.generate_traffic(1);
        }
        if let Some((lo, hi)) = self.fading {
            for ue in &mut self.ues {
                ue.fading_state = if hi > lo {
                    self.fading_rng.random_range(lo..hi)
                } else {
                    lo
                };
            }
        }

        let mut grants = vec![0u32; n];
        for slice in SliceKind::ALL {
            let ids = &self.members[slice.index()];
            let demand: Vec<UeDemand> = ids
                .iter()
                .map(|&i| {
                    let ue = &self.ues[i];
                    UeDemand {
                        buffer_bits: ue.buffer.bytes() as f64 * 8.0,
                        bits_per_prb: ue.spectral_efficiency * ue.fading_state,
                        avg_rate: self.pf_ewma[i],
                    }
                })
                .collect();
            let g = schedule_slice(
                self.assignment.scheduler(slice),
                &demand,
                self.partition.share(slice),
                &mut self.rr_pointers[slice.index()],
            );
            for (&i, gi) in ids.iter().zip(g) {
                grants[i] = gi;
            }
        }

        let mut served_bytes = vec![0u64; n];
        let mut drained_packets = vec![0u32; n];
        for (i, ue) in self.ues.iter_mut().enumerate() {
            let capacity_bits = grants[i] as f64 * ue.spectral_efficiency * ue.fading_state;
            let budget = (capacity_bits / 8.0).floor() as u64;
            let (sent, drained) = ue.buffer.serve(budget);
            ue.served_bytes += sent;
            ue.drained_packets += drained as u64;
            served_bytes[i] = sent;
            drained_packets[i] = drained;
            self.pf_ewma[i] = pf_ewma_update(self.pf_ewma[i], sent as f64 * 8.0);
        }
        self.tti_counter += 1;
        TtiOutcome {
            grants,
            served_bytes,
            drained_packets,
        }
    }

    pub fn run(&mut self, ttis: u64) {
        for _ in 0..ttis {
            self.serve_tti();
        }
    }

    pub fn snapshot(&self) -> CounterSnapshot {
        CounterSnapshot {
            tti: self.tti_counter,
            served_bytes: self.ues.iter().map(|u| u.served_bytes).collect(),
            drained_packets: self.ues.iter().map(|u| u.drained_packets).collect(),
        }
    }

    /// Slice KPMs over `[since.tti, now)`: mean per-UE throughput, mean
    /// buffer occupancy at the end of the window, mean packets completed.
    pub fn measure_kpm(
        &self,
        slice: SliceKind,
        since: &CounterSnapshot,
    ) -> Result<KpmSample, SimError> {
        if self.tti_counter <= since.tti {
            return Err(SimError::EmptyWindow {
                start: since.tti,
                end: self.tti_counter,
            });
        }
        let window_s = (self.tti_counter - since.tti) as f64 * TTI_SECONDS;
        let ids = self.slice_members(slice);
        let k = ids.len() as f64;
        let mut served = 0.0;
        let mut buffered = 0.0;
        let mut drained = 0.0;
        for &i in ids {
            let ue = &self.ues[i];
            served += (ue.served_bytes - since.served_bytes[i]) as f64;
            buffered += ue.buffer.bytes() as f64;
            drained += (ue.drained_packets - since.drained_packets[i]) as f64;
        }
        Ok(KpmSample {
            slice,
            tti: self.tti_counter,
            dl_throughput_mbps: (served / k) * 8.0 / window_s / 1e6,
            buffer_bytes: buffered / k,
            tx_packets: drained / k,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scenario::UeConfig;
    use crate::sim::types::{SchedulerKind, TrafficProfile};

    #[test]
    fn queue_counts_only_whole_packets() {
        let mut q = PacketQueue::default();
        q.push(1000);
        assert_eq!(q.serve(437), (437, 0));
        assert_eq!(q.bytes(), 563);
        assert_eq!(q.serve(1000), (563, 1));
        assert!(q.is_empty());
        assert_eq!(q.serve(10), (0, 0));
    }

    fn quiet_scenario() -> Scenario {
        let mut scenario = Scenario::paper_default();
        for ue in scenario.ues.iter_mut() {
            ue.traffic = TrafficProfile::cbr(1e-3, 1).unwrap();
        }
        scenario
    }

    #[test]
    fn serve_partial_packet() {
        let mut scenario = quiet_scenario();
        scenario.initial_partition = PrbPartition::new(10, 20, 20).unwrap();
        let mut bs = BsState::new(&scenario, 1).unwrap();
        bs.ues[0].buffer.push(1000);
        let out = bs.serve_tti();
        // UE 1 has nothing queued, so all 10 eMBB PRBs go to UE 0.
        assert_eq!(out.grants[0], 10);
        assert_eq!(out.served_bytes[0], 437);
        assert_eq!(out.drained_packets[0], 0);
        assert_eq!(bs.ues[0].buffer.bytes(), 563);
        assert_eq!(bs.tti_counter, 1);
    }

    #[test]
    fn zero_grant_leaves_buffer_alone() {
        let mut scenario = quiet_scenario();
        scenario.initial_schedulers = SchedulerAssignment([SchedulerKind::PF; 3]);
        let mut bs = BsState::new(&scenario, 1).unwrap();
        bs.ues[0].buffer.push(100_000);
        bs.ues[1].buffer.push(100_000);
        // UE 1 has the lower PF average, so it takes every eMBB PRB this TTI.
        bs.pf_ewma[0] = 1e6;
        let out = bs.serve_tti();
        assert_eq!(out.grants[0], 0);
        assert_eq!(out.served_bytes[0], 0);
        assert_eq!(bs.ues[0].buffer.bytes(), 100_000);
        assert_eq!(out.grants[1], 20);
    }

    #[test]
    fn empty_buffers_get_nothing() {
        let mut bs = BsState::new(&quiet_scenario(), 1).unwrap();
        let out = bs.serve_tti();
        assert!(out.grants.iter().all(|&g| g == 0));
        assert!(out.served_bytes.iter().all(|&b| b == 0));
    }

    #[test]
    fn apply_control_keeps_untouched_parameter() {
        let mut bs = BsState::reset(0);
        let a0 = bs.assignment();
        bs.apply_control(Some(PrbPartition::new(30, 15, 5).unwrap()), None)
            .unwrap();
        assert_eq!(bs.partition().shares(), [30, 15, 5]);
        assert_eq!(bs.assignment(), a0);
        let new_a = SchedulerAssignment([SchedulerKind::PF, SchedulerKind::WF, SchedulerKind::RR]);
        bs.apply_control(None, Some(new_a)).unwrap();
        assert_eq!(bs.partition().shares(), [30, 15, 5]);
        assert_eq!(bs.assignment(), new_a);
        assert!(matches!(bs.apply_control(None, None), Err(SimError::EmptyControl)));
        assert!(matches!(
            bs.apply_control_raw(Some([40, 10, 5]), None),
            Err(SimError::InvalidPartition { .. })
        ));
        assert_eq!(bs.partition().shares(), [30, 15, 5]);
    }

    #[test]
    fn measure_throughput_of_known_window() {
        // Two eMBB UEs each served 50 000 bytes in 100 ms -> 4.0 Mbps.
        let mut bs = BsState::reset(0);
        let since = bs.snapshot();
        bs.tti_counter += 100;
        for &i in bs.slice_members(SliceKind::Embb).to_vec().iter() {
            bs.ues[i].served_bytes += 50_000;
        }
        let k = bs.measure_kpm(SliceKind::Embb, &since).unwrap();
        assert!((k.dl_throughput_mbps - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tx_packets_is_slice_mean() {
        let mut bs = BsState::reset(0);
        let since = bs.snapshot();
        bs.tti_counter += 10;
        let ids = bs.slice_members(SliceKind::Mmtc).to_vec();
        bs.ues[ids[0]].drained_packets += 30;
        bs.ues[ids[1]].drained_packets += 44;
        let k = bs.measure_kpm(SliceKind::Mmtc, &since).unwrap();
        assert_eq!(k.tx_packets, 37.0);
    }

    #[test]
    fn quiet_cell_reports_zeros() {
        let mut bs = BsState::new(&quiet_scenario(), 5).unwrap();
        bs.run(250);
        let since = bs.snapshot();
        bs.run(100);
        for slice in SliceKind::ALL {
            let k = bs.measure_kpm(slice, &since).unwrap();
            assert_eq!(
                (k.dl_throughput_mbps, k.buffer_bytes, k.tx_packets),
                (0.0, 0.0, 0.0)
            );
        }
    }

    #[test]
    fn empty_window_is_an_error() {
        let bs = BsState::reset(0);
        let since = bs.snapshot();
        assert!(bs.measure_kpm(SliceKind::Embb, &since).is_err());
    }

    #[test]
    fn reset_defaults() {
        let bs = BsState::reset(7);
        assert_eq!(bs.ues().len(), 6);
        for slice in SliceKind::ALL {
            assert_eq!(bs.slice_members(slice).len(), 2);
        }
        for &i in bs.slice_members(SliceKind::Embb) {
            assert_eq!(bs.ues()[i].traffic.profile().rate_bps, 4e6);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let mut a = BsState::new(&Scenario::contended(), 7).unwrap();
        let mut b = BsState::new(&Scenario::contended(), 7).unwrap();
        for t in 0..10_000u64 {
            if t % 1000 == 0 {
                let p = PrbPartition::catalog()[(t / 1000) as usize % 36];
                a.apply_control(Some(p), None).unwrap();
                b.apply_control(Some(p), None).unwrap();
            }
            assert_eq!(a.serve_tti(), b.serve_tti());
        }
        assert_eq!(a, b);
        let mut c = BsState::new(&Scenario::contended(), 8).unwrap();
        c.run(10_000);
        assert_ne!(a.ues()[2].arrived_bytes, c.ues()[2].arrived_bytes);
    }

    #[test]
    fn full_carrier_on_embb_keeps_buffers_bounded() {
        let mut bs = BsState::reset(11);
        bs.apply_control(Some(PrbPartition::new(40, 5, 5).unwrap()), None)
            .unwrap();
        let mut peak = 0;
        for _ in 0..20_000 {
            bs.serve_tti();
            for &i in bs.slice_members(SliceKind::Embb) {
                peak = peak.max(bs.ues()[i].buffer.bytes());
            }
        }
        // 40 PRBs carry 14 Mbps against 8 Mbps offered; a CBR packet never waits long.
        assert!(peak <= 3000, "peak eMBB buffer {peak}");
    }

    #[test]
    fn custom_efficiency_is_honoured() {
        let scenario = Scenario {
            ues: vec![
                UeConfig {
                    slice: SliceKind::Embb,
                    traffic: TrafficProfile::cbr(4e6, 1500).unwrap(),
                    spectral_efficiency: 700.0,
                },
                UeConfig {
                    slice: SliceKind::Mmtc,
                    traffic: TrafficProfile::cbr(1e-3, 1).unwrap(),
                    spectral_efficiency: 350.0,
                },
                UeConfig {
                    slice: SliceKind::Urllc,
                    traffic: TrafficProfile::cbr(1e-3, 1).unwrap(),
                    spectral_efficiency: 350.0,
                },
            ],
            ..Scenario::paper_default()
        };
        let mut bs = BsState::new(&scenario, 0).unwrap();
        bs.ues[0].buffer.push(10_000);
        let out = bs.serve_tti();
        assert_eq!(out.grants[0], 20);
        assert_eq!(out.served_bytes[0], 20 * 700 / 8);
    }
}
