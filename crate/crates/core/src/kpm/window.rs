use serde::{Deserialize, Serialize};

use super::sample::{KpmSample, METRICS, WINDOW_LEN};
use super::KpmError;
use crate::sim::{BsState, CounterSnapshot, SliceKind};

/// K x M block of consecutive samples of one slice, oldest row first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpmWindow {
    pub slice: SliceKind,
    pub rows: [[f64; METRICS]; WINDOW_LEN],
}

impl KpmWindow {
    pub fn from_samples(samples: &[KpmSample]) -> Result<Self, KpmError> {
        if samples.len() != WINDOW_LEN {
            return Err(KpmError::IncompleteWindow(samples.len()));
        }
        let slice = samples[0].slice;
        let mut rows = [[0.0; METRICS]; WINDOW_LEN];
        for (row, s) in rows.iter_mut().zip(samples) {
            if s.slice != slice {
                return Err(KpmError::SliceMismatch {
                    expected: slice,
                    got: s.slice,
                });
            }
            *row = s.metrics();
        }
        Ok(KpmWindow { slice, rows })
    }

    /// Row-major flattening, 30 values.
    pub fn flatten(&self) -> [f64; WINDOW_LEN * METRICS] {
        let mut out = [0.0; WINDOW_LEN * METRICS];
        for (i, row) in self.rows.iter().enumerate() {
            out[i * METRICS..(i + 1) * METRICS].copy_from_slice(row);
        }
        out
    }

    /// Column means, i.e. the window-averaged KPMs.
    pub fn mean_sample(&self, tti: u64) -> KpmSample {
        let mut acc = [0.0; METRICS];
        for row in &self.rows {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let k = WINDOW_LEN as f64;
        KpmSample {
            slice: self.slice,
            tti,
            dl_throughput_mbps: acc[0] / k,
            buffer_bytes: acc[1] / k,
            tx_packets: acc[2] / k,
        }
    }
}

/// Tumbling-window accumulator for one (slice, subscription) stream.
#[derive(Clone, Debug)]
pub struct WindowStream {
    slice: SliceKind,
    pending: Vec<KpmSample>,
    last_tti: Option<u64>,
    pushed: u64,
}

impl WindowStream {
    pub fn new(slice: SliceKind) -> Self {
        WindowStream {
            slice,
            pending: Vec::with_capacity(WINDOW_LEN),
            last_tti: None,
            pushed: 0,
        }
    }

    pub fn slice(&self) -> SliceKind {
        self.slice
    }

    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    /// Adds a sample; returns a window on every tenth accepted sample.
    pub fn push_sample(&mut self, sample: KpmSample) -> Result<Option<KpmWindow>, KpmError> {
        if sample.slice != self.slice {
            return Err(KpmError::SliceMismatch {
                expected: self.slice,
                got: sample.slice,
            });
        }
        if let Some(last) = self.last_tti {
            if sample.tti <= last {
                return Err(KpmError::OutOfOrderSample {
                    last,
                    got: sample.tti,
                });
            }
        }
        self.last_tti = Some(sample.tti);
        self.pushed += 1;
        self.pending.push(sample);
        if self.pending.len() == WINDOW_LEN {
            let w = KpmWindow::from_samples(&self.pending)?;
            self.pending.clear();
            Ok(Some(w))
        } else {
            Ok(None)
        }
    }
}

/// Samples all three slices every `sample_interval` TTIs and emits one
/// window per slice every tenth sample.
#[derive(Clone, Debug)]
pub struct KpmCollector {
    sample_interval: u64,
    since: CounterSnapshot,
    streams: [WindowStream; 3],
}

impl KpmCollector {
    pub fn new(bs: &BsState, sample_interval: u64) -> Self {
        assert!(sample_interval > 0, "sample interval must be positive");
        KpmCollector {
            sample_interval,
            since: bs.snapshot(),
            streams: SliceKind::ALL.map(WindowStream::new),
        }
    }

    pub fn sample_interval(&self) -> u64 {
        self.sample_interval
    }

    /// Call after every served TTI.
    pub fn on_tti(&mut self, bs: &BsState) -> Result<Option<[KpmWindow; 3]>, KpmError> {
        if bs.tti_counter == self.since.tti || !(bs.tti_counter - self.since.tti).is_multiple_of(self.sample_interval) {
            return Ok(None);
        }
        let mut out: [Option<KpmWindow>; 3] = Default::default();
        for slice in SliceKind::ALL {
            let sample = bs.measure_kpm(slice, &self.since)?;
            out[slice.index()] = self.streams[slice.index()].push_sample(sample)?;
        }
        self.since = bs.snapshot();
        match out {
            [Some(a), Some(b), Some(c)] => Ok(Some([a, b, c])),
            _ => Ok(None),
        }
    }
}
