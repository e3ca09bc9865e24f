use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sample::KpmSample;
use super::window::{KpmCollector, KpmWindow, WindowStream};
use super::KpmError;
use crate::sim::{BsState, PrbPartition, Scenario, SchedulerAssignment, SliceKind};

pub const TRACE_COLUMNS: [&str; 5] = ["tti", "slice", "dl_throughput_mbps", "buffer_bytes", "tx_packets"];

/// Reads a KPM trace and cuts it into tumbling windows per slice.
pub fn ingest_trace(path: &Path) -> Result<Vec<KpmWindow>, KpmError> {
    let file = File::open(path).map_err(|e| KpmError::Io(path.display().to_string(), e))?;
    ingest_reader(file)
}

pub fn ingest_reader<R: Read>(reader: R) -> Result<Vec<KpmWindow>, KpmError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Ok(Vec::new()),
        Some(r) => r.map_err(|e| KpmError::Parse {
            line: 1,
            message: e.to_string(),
        })?,
    };
    let mut index = [0usize; 5];
    for (slot, name) in index.iter_mut().zip(TRACE_COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| KpmError::MissingColumn(name.to_string()))?;
    }

    let mut streams: BTreeMap<SliceKind, WindowStream> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| KpmError::Parse {
            line,
            message: e.to_string(),
        })?;
        let field = |k: usize| -> Result<&str, KpmError> {
            rec.get(index[k]).map(str::trim).ok_or_else(|| KpmError::Parse {
                line,
                message: format!("missing field `{}`", TRACE_COLUMNS[k]),
            })
        };
        let bad = |message: String| KpmError::Parse { line, message };
        let tti: u64 = field(0)?
            .parse()
            .map_err(|e| bad(format!("tti: {e}")))?;
        let slice: SliceKind = field(1)?.parse().map_err(|e| bad(format!("{e}")))?;
        let metric = |k: usize| -> Result<f64, KpmError> {
            let v: f64 = field(k)?
                .parse()
                .map_err(|e| bad(format!("{}: {e}", TRACE_COLUMNS[k])))?;
            if !v.is_finite() || v < 0.0 {
                return Err(bad(format!("{} must be finite and non-negative, got {v}", TRACE_COLUMNS[k])));
            }
            Ok(v)
        };
        let sample = KpmSample {
            slice,
            tti,
            dl_throughput_mbps: metric(2)?,
            buffer_bytes: metric(3)?,
            tx_packets: metric(4)?,
        };
        let stream = streams
            .entry(slice)
            .or_insert_with(|| WindowStream::new(slice));
        match stream.push_sample(sample) {
            Ok(Some(w)) => out.push(w),
            Ok(None) => {}
            Err(e) => return Err(bad(e.to_string())),
        }
    }
    Ok(out)
}

/// Windows from the simulator under uniformly random slicing and scheduling
/// changes, one change per window. Used to fit the encoder when no recorded
/// trace is available.
pub fn simulate_windows(
    scenario: &Scenario,
    windows_per_slice: usize,
    sample_interval: u64,
    seed: u64,
) -> Result<Vec<KpmWindow>, KpmError> {
    let partitions = PrbPartition::catalog();
    let assignments = SchedulerAssignment::catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7ace);
    let mut out = Vec::with_capacity(windows_per_slice * 3);
    // Restart the cell now and then so backlogs from starved partitions do
    // not dominate the data.
    let restart_every = 50;
    let mut produced = 0;
    let mut episode = 0u64;
    while produced < windows_per_slice {
        let mut bs = BsState::new(scenario, seed.wrapping_add(episode)).map_err(KpmError::Sim)?;
        let mut collector = KpmCollector::new(&bs, sample_interval);
        episode += 1;
        let mut in_episode = 0;
        while in_episode < restart_every && produced < windows_per_slice {
            let p = partitions[rng.random_range(0..partitions.len())];
            let a = assignments[rng.random_range(0..assignments.len())];
            bs.apply_control(Some(p), Some(a)).map_err(KpmError::Sim)?;
            loop {
                bs.serve_tti();
                if let Some(ws) = collector.on_tti(&bs)? {
                    out.extend(ws);
                    break;
                }
            }
            produced += 1;
            in_episode += 1;
        }
    }
    Ok(out)
}
