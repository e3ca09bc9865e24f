//! The lockstep loop with xApps on the far side of a line-oriented transport.

use std::cell::RefCell;
use std::io::{BufRead, Write};
use std::rc::Rc;

use super::runtime::{run_control_loop, LoopConfig, LoopStats, Runtime, XappDescriptor, XappEndpoint};
use super::wire::{AckMsg, ControlMsg, IndicationMsg, WireMessage};
use super::RicError;
use crate::metrics::MetricLog;
use crate::sim::BsState;

struct Transport<R, W> {
    reader: R,
    writer: W,
}

impl<R: BufRead, W: Write> Transport<R, W> {
    fn send(&mut self, msg: &WireMessage) -> Result<(), RicError> {
        writeln!(self.writer, "{}", msg.to_line())?;
        self.writer.flush()?;
        Ok(())
    }

    /// Next non-blank line, or `None` at end of stream.
    fn recv_line(&mut self) -> Result<Option<String>, RicError> {
        loop {
            let mut line = String::new();
            if self.reader.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            if !line.trim().is_empty() {
                return Ok(Some(line));
            }
        }
    }
}

struct RemoteXapp<R, W> {
    descriptor: XappDescriptor,
    transport: Rc<RefCell<Transport<R, W>>>,
    last_accepted: u64,
}

impl<R: BufRead, W: Write> XappEndpoint for RemoteXapp<R, W> {
    fn descriptor(&self) -> &XappDescriptor {
        &self.descriptor
    }

    fn on_indication(&mut self, indication: &IndicationMsg) -> Result<ControlMsg, RicError> {
        let mut t = self.transport.borrow_mut();
        t.send(&WireMessage::Indication(indication.clone()))?;
        loop {
            let Some(line) = t.recv_line()? else {
                return Err(RicError::Disconnected(self.descriptor.xapp_id.clone()));
            };
            let control = match WireMessage::parse(&line) {
                Err(e) => {
                    t.send(&WireMessage::Ack(AckMsg::error(0, format!("parse error: {e}"))))?;
                    continue;
                }
                Ok(WireMessage::Control(c)) => c,
                Ok(other) => {
                    let seq = match &other {
                        WireMessage::Ack(a) => a.seq,
                        _ => 0,
                    };
                    t.send(&WireMessage::Ack(AckMsg::error(seq, "expected a control message")))?;
                    continue;
                }
            };
            if control.xapp_id != self.descriptor.xapp_id {
                t.send(&WireMessage::Ack(AckMsg::error(
                    control.seq,
                    format!("waiting for a control from {}", self.descriptor.xapp_id),
                )))?;
                continue;
            }
            if control.seq < self.last_accepted {
                return Err(RicError::ProtocolViolation(format!(
                    "{}: control seq {} after {}",
                    control.xapp_id, control.seq, self.last_accepted
                )));
            }
            if control.seq != indication.seq {
                t.send(&WireMessage::Ack(AckMsg::error(
                    control.seq,
                    format!("stale seq {}, expected {}", control.seq, indication.seq),
                )))?;
                continue;
            }
            if !self.descriptor.controlled.permits(&control) {
                t.send(&WireMessage::Ack(AckMsg::error(
                    control.seq,
                    format!("{} may only control {}", control.xapp_id, self.descriptor.controlled),
                )))?;
                continue;
            }
            self.last_accepted = control.seq;
            t.send(&WireMessage::Ack(AckMsg::ok(control.seq)))?;
            return Ok(control);
        }
    }
}

/// Accepts `expected_xapps` subscriptions over one transport, then runs the
/// control loop with each subscriber as a remote xApp. Rejected
/// subscriptions are answered with an error ack and do not count.
pub fn serve_wire<R: BufRead, W: Write>(
    reader: R,
    writer: W,
    bs: &mut BsState,
    expected_xapps: usize,
    cfg: &LoopConfig,
) -> Result<(MetricLog, LoopStats), RicError> {
    let transport = Rc::new(RefCell::new(Transport { reader, writer }));
    let mut runtime = Runtime::new();
    while runtime.xapps().len() < expected_xapps {
        let mut t = transport.borrow_mut();
        let Some(line) = t.recv_line()? else {
            return Err(RicError::Disconnected("before all subscriptions arrived".into()));
        };
        match WireMessage::parse(&line) {
            Err(e) => t.send(&WireMessage::Ack(AckMsg::error(0, format!("parse error: {e}"))))?,
            Ok(WireMessage::Subscribe(s)) => match runtime.subscribe(XappDescriptor::from_subscribe(&s)) {
                Ok(_) => t.send(&WireMessage::Ack(AckMsg::ok(0)))?,
                Err(e) => t.send(&WireMessage::Ack(AckMsg::error(0, e.to_string())))?,
            },
            Ok(_) => t.send(&WireMessage::Ack(AckMsg::error(0, "subscribe first")))?,
        }
    }
    let mut remotes: Vec<RemoteXapp<R, W>> = runtime
        .xapps()
        .iter()
        .map(|d| RemoteXapp {
            descriptor: d.clone(),
            transport: Rc::clone(&transport),
            last_accepted: 0,
        })
        .collect();
    let mut endpoints: Vec<&mut dyn XappEndpoint> = remotes.iter_mut().map(|r| r as &mut dyn XappEndpoint).collect();
    run_control_loop(bs, &mut endpoints, cfg)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClientStats {
    pub indications: u64,
    pub acks_ok: u64,
    pub acks_error: u64,
}

/// Subscribes `xapp` and answers every indication until the server closes
/// the stream.
pub fn run_wire_client<R: BufRead, W: Write>(
    reader: R,
    writer: W,
    xapp: &mut dyn XappEndpoint,
) -> Result<ClientStats, RicError> {
    let mut t = Transport { reader, writer };
    let d = xapp.descriptor();
    t.send(&WireMessage::Subscribe(d.subscription.to_message(d.controlled)))?;
    let mut stats = ClientStats::default();
    let mut subscribed = false;
    while let Some(line) = t.recv_line()? {
        match WireMessage::parse(&line).map_err(|e| RicError::ProtocolViolation(e.to_string()))? {
            WireMessage::Ack(a) if !subscribed => {
                if !a.ok {
                    return Err(RicError::ProtocolViolation(format!(
                        "subscription refused: {}",
                        a.error.unwrap_or_default()
                    )));
                }
                subscribed = true;
            }
            WireMessage::Ack(a) => {
                if a.ok {
                    stats.acks_ok += 1;
                } else {
                    stats.acks_error += 1;
                }
            }
            WireMessage::Indication(ind) => {
                stats.indications += 1;
                let control = xapp.on_indication(&ind)?;
                t.send(&WireMessage::Control(control))?;
            }
            other => {
                return Err(RicError::ProtocolViolation(format!(
                    "unexpected message from server: {}",
                    other.to_line()
                )))
            }
        }
    }
    Ok(stats)
}
