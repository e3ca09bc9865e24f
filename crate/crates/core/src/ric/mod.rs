//! Subscriptions, xApp hosting, the line-delimited protocol and the
//! lockstep control loop.

mod runtime;
mod session;
mod wire;

use thiserror::Error;

use crate::agent::AgentError;
use crate::kpm::KpmError;
use crate::sim::SimError;

pub use runtime::{
    run_control_loop, ControlledParameter, HierarchicalSetup, LoopConfig, LoopStats, PolicyXapp, Runtime,
    Subscription, XappDescriptor, XappEndpoint,
};
pub use session::{run_wire_client, serve_wire, ClientStats};
pub use wire::{
    AckMsg, ControlMsg, IndicationMsg, MetricName, ParseError, SubscribeMsg, WindowRows, WireMessage,
    WIRE_VERSION,
};

#[derive(Debug, Error)]
pub enum RicError {
    #[error("xApp `{0}` is already registered")]
    DuplicateXapp(String),
    #[error("reporting period {0} ms must be a positive multiple of 10")]
    InvalidPeriod(u64),
    #[error("xApps `{existing}` and `{incoming}` control the same parameter")]
    Conflict { existing: String, incoming: String },
    #[error("no xApp `{0}` is registered")]
    UnknownXapp(String),
    #[error("xApp `{0}` has no policy loaded")]
    PolicyNotLoaded(String),
    #[error("xApp `{xapp_id}` declares {declared} but its policy controls {checkpoint}")]
    MismatchedParameter {
        xapp_id: String,
        declared: ControlledParameter,
        checkpoint: ControlledParameter,
    },
    #[error("xApp `{0}` sent a control outside its declared parameters")]
    ParameterViolation(String),
    #[error("indication for `{0}` lacks a slice window")]
    IncompleteIndication(String),
    #[error("unknown hierarchical setup {0}")]
    UnknownSetup(u8),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("peer disconnected: {0}")]
    Disconnected(String),
    #[error("transport: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Kpm(#[from] KpmError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
