//! Append-only record of a closed-loop run: KPM samples with the controls in
//! force, plus every control applied.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kpm::KpmSample;
use crate::sim::{PrbPartition, SchedulerAssignment, SliceKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogRow {
    pub sample: KpmSample,
    pub partition: PrbPartition,
    pub assignment: SchedulerAssignment,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionRecord {
    /// First TTI served under the new controls.
    pub tti: u64,
    pub xapp_id: String,
    pub seq: u64,
    pub partition: Option<PrbPartition>,
    pub assignment: Option<SchedulerAssignment>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    tti: u64,
    slice: SliceKind,
    dl_throughput_mbps: f64,
    buffer_bytes: f64,
    tx_packets: f64,
    partition: String,
    assignment: String,
}

#[derive(Serialize)]
struct CsvAction<'a> {
    tti: u64,
    xapp_id: &'a str,
    seq: u64,
    partition: String,
    assignment: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Throughput,
    Buffer,
    Packets,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Throughput, Metric::Buffer, Metric::Packets];

    pub fn of(self, s: &KpmSample) -> f64 {
        match self {
            Metric::Throughput => s.dl_throughput_mbps,
            Metric::Buffer => s.buffer_bytes,
            Metric::Packets => s.tx_packets,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Metric::Throughput => "dl_throughput_mbps",
            Metric::Buffer => "buffer_bytes",
            Metric::Packets => "tx_packets",
        }
    }

    /// The metric a slice is judged by.
    pub fn objective(slice: SliceKind) -> Metric {
        match slice {
            SliceKind::Embb => Metric::Throughput,
            SliceKind::Mmtc => Metric::Packets,
            SliceKind::Urllc => Metric::Buffer,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricLog {
    rows: Vec<LogRow>,
    actions: Vec<ActionRecord>,
}

impl MetricLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_row(&mut self, row: LogRow) {
        self.rows.push(row);
    }

    pub fn push_action(&mut self, action: ActionRecord) {
        self.actions.push(action);
    }

    pub fn rows(&self) -> &[LogRow] {
        &self.rows
    }

    pub fn actions(&self) -> &[ActionRecord] {
        &self.actions
    }

    pub fn samples(&self, slice: SliceKind) -> impl Iterator<Item = &KpmSample> {
        self.rows
            .iter()
            .map(|r| &r.sample)
            .filter(move |s| s.slice == slice)
    }

    pub fn values(&self, slice: SliceKind, metric: Metric) -> Vec<f64> {
        self.samples(slice).map(|s| metric.of(s)).collect()
    }

    /// Rows as CSV, with the trace columns first so the file doubles as a
    /// KPM trace.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(CsvRow {
                tti: r.sample.tti,
                slice: r.sample.slice,
                dl_throughput_mbps: r.sample.dl_throughput_mbps,
                buffer_bytes: r.sample.buffer_bytes,
                tx_packets: r.sample.tx_packets,
                partition: r.partition.to_string(),
                assignment: r.assignment.to_string(),
            })?;
        }
        if self.rows.is_empty() {
            out.write_record([
                "tti",
                "slice",
                "dl_throughput_mbps",
                "buffer_bytes",
                "tx_packets",
                "partition",
                "assignment",
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_actions_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let opt = |s: Option<String>| s.unwrap_or_default();
        for a in &self.actions {
            out.serialize(CsvAction {
                tti: a.tti,
                xapp_id: &a.xapp_id,
                seq: a.seq,
                partition: opt(a.partition.map(|p| p.to_string())),
                assignment: opt(a.assignment.map(|p| p.to_string())),
            })?;
        }
        if self.actions.is_empty() {
            out.write_record(["tti", "xapp_id", "seq", "partition", "assignment"])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn save(&self, kpm_path: &Path, actions_path: &Path) -> csv::Result<()> {
        self.write_csv(File::create(kpm_path)?)?;
        self.write_actions_csv(File::create(actions_path)?)
    }

    /// Reads back the rows of a log written by [`MetricLog::write_csv`].
    /// Actions live in a separate file and are not restored.
    pub fn read_csv<R: Read>(r: R) -> Result<MetricLog, String> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut log = MetricLog::new();
        for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let line = i + 2;
            let r = row.map_err(|e| format!("line {line}: {e}"))?;
            log.push_row(LogRow {
                sample: KpmSample {
                    slice: r.slice,
                    tti: r.tti,
                    dl_throughput_mbps: r.dl_throughput_mbps,
                    buffer_bytes: r.buffer_bytes,
                    tx_packets: r.tx_packets,
                },
                partition: r.partition.parse().map_err(|e| format!("line {line}: {e}"))?,
                assignment: r.assignment.parse().map_err(|e| format!("line {line}: {e}"))?,
            });
        }
        Ok(log)
    }
}
