//! Line-delimited JSON messages between the RAN side and xApps.
//!
//! Every line is one object carrying `"v": 1` and a `"type"` tag.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::runtime::ControlledParameter;
use crate::kpm::{KpmWindow, METRICS, WINDOW_LEN};
use crate::sim::{PrbPartition, SchedulerAssignment, SliceKind};

pub const WIRE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricName {
    #[serde(rename = "thr")]
    Throughput,
    #[serde(rename = "buf")]
    Buffer,
    #[serde(rename = "pkt")]
    Packets,
}

impl MetricName {
    pub const ALL: [MetricName; 3] = [MetricName::Throughput, MetricName::Buffer, MetricName::Packets];
}

pub type WindowRows = [[f64; METRICS]; WINDOW_LEN];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubscribeMsg {
    pub xapp_id: String,
    pub period_ms: u64,
    pub metrics: Vec<MetricName>,
    pub slices: Vec<SliceKind>,
    /// Parameters the xApp will control; both when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<ControlledParameter>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicationMsg {
    pub xapp_id: String,
    pub seq: u64,
    pub tti: u64,
    pub windows: BTreeMap<SliceKind, WindowRows>,
}

impl IndicationMsg {
    pub fn new(xapp_id: &str, seq: u64, tti: u64, windows: &[KpmWindow]) -> Self {
        IndicationMsg {
            xapp_id: xapp_id.to_string(),
            seq,
            tti,
            windows: windows.iter().map(|w| (w.slice, w.rows)).collect(),
        }
    }

    pub fn window(&self, slice: SliceKind) -> Option<KpmWindow> {
        self.windows.get(&slice).map(|rows| KpmWindow { slice, rows: *rows })
    }

    /// eMBB, mMTC and URLLC windows, if all three are present.
    pub fn all_windows(&self) -> Option<[KpmWindow; 3]> {
        Some([
            self.window(SliceKind::Embb)?,
            self.window(SliceKind::Mmtc)?,
            self.window(SliceKind::Urllc)?,
        ])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlMsg {
    pub xapp_id: String,
    /// Sequence number of the indication this control answers.
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PrbPartition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<SchedulerAssignment>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AckMsg {
    pub seq: u64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AckMsg {
    pub fn ok(seq: u64) -> Self {
        AckMsg {
            seq,
            ok: true,
            error: None,
        }
    }

    pub fn error(seq: u64, message: impl Into<String>) -> Self {
        AckMsg {
            seq,
            ok: false,
            error: Some(message.into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum WireMessage {
    Subscribe(SubscribeMsg),
    Indication(IndicationMsg),
    Control(ControlMsg),
    Ack(AckMsg),
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    v: u32,
    #[serde(flatten)]
    msg: &'a WireMessage,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    v: u32,
    #[serde(flatten)]
    msg: WireMessage,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError(pub String);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

impl WireMessage {
    /// One line of JSON, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(&EnvelopeOut { v: WIRE_VERSION, msg: self }).expect("wire messages serialize")
    }

    pub fn parse(line: &str) -> Result<WireMessage, ParseError> {
        let env: EnvelopeIn = serde_json::from_str(line.trim_end_matches(['\r', '\n']))
            .map_err(|e| ParseError(e.to_string()))?;
        if env.v != WIRE_VERSION {
            return Err(ParseError(format!("unsupported protocol version {}", env.v)));
        }
        Ok(env.msg)
    }
}
