use serde::{Deserialize, Serialize};

use crate::sim::SliceKind;

/// Number of measurements in one window.
pub const WINDOW_LEN: usize = 10;
/// Metrics per measurement: throughput, buffer, transmitted packets.
pub const METRICS: usize = 3;

/// One slice-level measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpmSample {
    pub slice: SliceKind,
    pub tti: u64,
    pub dl_throughput_mbps: f64,
    pub buffer_bytes: f64,
    pub tx_packets: f64,
}

impl KpmSample {
    pub fn zero(slice: SliceKind, tti: u64) -> Self {
        KpmSample {
            slice,
            tti,
            dl_throughput_mbps: 0.0,
            buffer_bytes: 0.0,
            tx_packets: 0.0,
        }
    }

    pub fn metrics(&self) -> [f64; METRICS] {
        [self.dl_throughput_mbps, self.buffer_bytes, self.tx_packets]
    }

    pub fn is_valid(&self) -> bool {
        self.metrics().iter().all(|v| v.is_finite() && *v >= 0.0)
    }

    /// Element-wise mean of samples from the same slice; the tti of the last.
    pub fn mean(samples: &[KpmSample]) -> Option<KpmSample> {
        let last = samples.last()?;
        let n = samples.len() as f64;
        let mut acc = [0.0; METRICS];
        for s in samples {
            for (a, v) in acc.iter_mut().zip(s.metrics()) {
                *a += v;
            }
        }
        Some(KpmSample {
            slice: last.slice,
            tti: last.tti,
            dl_throughput_mbps: acc[0] / n,
            buffer_bytes: acc[1] / n,
            tx_packets: acc[2] / n,
        })
    }
}
