use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::wire::{ControlMsg, IndicationMsg, MetricName, SubscribeMsg};
use super::RicError;
use crate::agent::{actor_forward, ActionSpace, ActionSpaceKind, ControlAction, PolicyCheckpoint, PolicyParams};
use crate::kpm::{encode_state, EncoderParams, KpmCollector, KpmWindow};
use crate::metrics::{ActionRecord, LogRow, MetricLog};
use crate::sim::{BsState, SliceKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlledParameter {
    Slicing,
    Scheduling,
    Both,
}

impl ControlledParameter {
    pub fn covers_partition(self) -> bool {
        self != ControlledParameter::Scheduling
    }

    pub fn covers_assignment(self) -> bool {
        self != ControlledParameter::Slicing
    }

    pub fn overlaps(self, other: ControlledParameter) -> bool {
        (self.covers_partition() && other.covers_partition())
            || (self.covers_assignment() && other.covers_assignment())
    }

    /// Whether a control touches only parameters this set covers.
    pub fn permits(self, control: &ControlMsg) -> bool {
        (control.partition.is_none() || self.covers_partition())
            && (control.assignment.is_none() || self.covers_assignment())
    }
}

impl From<ActionSpaceKind> for ControlledParameter {
    fn from(kind: ActionSpaceKind) -> Self {
        match kind {
            ActionSpaceKind::SlicingOnly => ControlledParameter::Slicing,
            ActionSpaceKind::SchedulingOnly => ControlledParameter::Scheduling,
            ActionSpaceKind::Joint => ControlledParameter::Both,
        }
    }
}

impl fmt::Display for ControlledParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlledParameter::Slicing => "slicing",
            ControlledParameter::Scheduling => "scheduling",
            ControlledParameter::Both => "slicing+scheduling",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subscription {
    pub xapp_id: String,
    pub period_ms: u64,
    pub metrics: Vec<MetricName>,
    pub slices: Vec<SliceKind>,
}

impl Subscription {
    /// All metrics of all slices every `period_ms`.
    pub fn new(xapp_id: impl Into<String>, period_ms: u64) -> Self {
        Subscription {
            xapp_id: xapp_id.into(),
            period_ms,
            metrics: MetricName::ALL.to_vec(),
            slices: SliceKind::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), RicError> {
        if self.period_ms == 0 || !self.period_ms.is_multiple_of(10) {
            return Err(RicError::InvalidPeriod(self.period_ms));
        }
        Ok(())
    }

    /// TTIs between the ten samples of one window.
    pub fn sample_interval(&self) -> u64 {
        self.period_ms / 10
    }

    pub fn to_message(&self, controls: ControlledParameter) -> SubscribeMsg {
        SubscribeMsg {
            xapp_id: self.xapp_id.clone(),
            period_ms: self.period_ms,
            metrics: self.metrics.clone(),
            slices: self.slices.clone(),
            controls: Some(controls),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XappDescriptor {
    pub xapp_id: String,
    pub checkpoint: Option<PathBuf>,
    pub controlled: ControlledParameter,
    pub subscription: Subscription,
}

impl XappDescriptor {
    pub fn new(xapp_id: &str, controlled: ControlledParameter, period_ms: u64) -> Self {
        XappDescriptor {
            xapp_id: xapp_id.to_string(),
            checkpoint: None,
            controlled,
            subscription: Subscription::new(xapp_id, period_ms),
        }
    }

    pub fn from_subscribe(msg: &SubscribeMsg) -> Self {
        XappDescriptor {
            xapp_id: msg.xapp_id.clone(),
            checkpoint: None,
            controlled: msg.controls.unwrap_or(ControlledParameter::Both),
            subscription: Subscription {
                xapp_id: msg.xapp_id.clone(),
                period_ms: msg.period_ms,
                metrics: msg.metrics.clone(),
                slices: msg.slices.clone(),
            },
        }
    }
}

/// Reporting periods of a two-xApp slicing plus scheduling deployment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchicalSetup {
    pub id: u8,
    pub slicing_period_ms: u64,
    pub sched_period_ms: u64,
}

impl HierarchicalSetup {
    pub const ALL: [HierarchicalSetup; 4] = [
        HierarchicalSetup {
            id: 1,
            slicing_period_ms: 1000,
            sched_period_ms: 10_000,
        },
        HierarchicalSetup {
            id: 2,
            slicing_period_ms: 1000,
            sched_period_ms: 5000,
        },
        HierarchicalSetup {
            id: 3,
            slicing_period_ms: 10_000,
            sched_period_ms: 1000,
        },
        HierarchicalSetup {
            id: 4,
            slicing_period_ms: 5000,
            sched_period_ms: 1000,
        },
    ];

    pub fn from_id(id: u8) -> Result<Self, RicError> {
        Self::ALL
            .iter()
            .find(|s| s.id == id)
            .copied()
            .ok_or(RicError::UnknownSetup(id))
    }

    pub fn slicing_descriptor(&self) -> XappDescriptor {
        XappDescriptor::new("slicing", ControlledParameter::Slicing, self.slicing_period_ms)
    }

    pub fn scheduling_descriptor(&self) -> XappDescriptor {
        XappDescriptor::new("scheduling", ControlledParameter::Scheduling, self.sched_period_ms)
    }
}

/// Anything that turns an indication into a control: an in-process policy or
/// a remote peer behind the wire protocol.
pub trait XappEndpoint {
    fn descriptor(&self) -> &XappDescriptor;
    fn on_indication(&mut self, indication: &IndicationMsg) -> Result<ControlMsg, RicError>;
}

/// Hosts a trained policy: encode the windows, run the actor, translate the
/// chosen catalog entry into a control.
#[derive(Clone, Debug)]
pub struct PolicyXapp {
    descriptor: XappDescriptor,
    params: Option<PolicyParams>,
    encoder: EncoderParams,
    space: ActionSpace,
    greedy: bool,
    rng: ChaCha8Rng,
    max_latency: Duration,
}

impl PolicyXapp {
    pub fn new(descriptor: XappDescriptor, checkpoint: &PolicyCheckpoint, encoder: EncoderParams) -> Result<Self, RicError> {
        let declared = ControlledParameter::from(checkpoint.action_space);
        if declared != descriptor.controlled {
            return Err(RicError::MismatchedParameter {
                xapp_id: descriptor.xapp_id.clone(),
                declared: descriptor.controlled,
                checkpoint: declared,
            });
        }
        Ok(PolicyXapp {
            space: ActionSpace::new(checkpoint.action_space),
            params: Some(checkpoint.params.clone()),
            descriptor,
            encoder,
            greedy: true,
            rng: ChaCha8Rng::seed_from_u64(0),
            max_latency: Duration::ZERO,
        })
    }

    /// An xApp with no policy yet; every indication fails with
    /// [`RicError::PolicyNotLoaded`].
    pub fn unloaded(descriptor: XappDescriptor, encoder: EncoderParams) -> Self {
        let kind = match descriptor.controlled {
            ControlledParameter::Slicing => ActionSpaceKind::SlicingOnly,
            ControlledParameter::Scheduling => ActionSpaceKind::SchedulingOnly,
            ControlledParameter::Both => ActionSpaceKind::Joint,
        };
        PolicyXapp {
            space: ActionSpace::new(kind),
            params: None,
            descriptor,
            encoder,
            greedy: true,
            rng: ChaCha8Rng::seed_from_u64(0),
            max_latency: Duration::ZERO,
        }
    }

    /// Sample from the policy instead of taking its argmax.
    pub fn stochastic(mut self, seed: u64) -> Self {
        self.greedy = false;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self
    }

    pub fn max_latency(&self) -> Duration {
        self.max_latency
    }

    pub fn decide(&mut self, windows: &[KpmWindow; 3]) -> Result<ControlAction, RicError> {
        let params = self
            .params
            .as_ref()
            .ok_or_else(|| RicError::PolicyNotLoaded(self.descriptor.xapp_id.clone()))?;
        let state = encode_state(windows, &self.encoder)?;
        let dist = actor_forward(params, &state);
        let (index, _) = if self.greedy {
            dist.argmax()
        } else {
            dist.sample(&mut self.rng)
        };
        Ok(self.space.decode(index).expect("policy head matches the catalog"))
    }
}

impl XappEndpoint for PolicyXapp {
    fn descriptor(&self) -> &XappDescriptor {
        &self.descriptor
    }

    fn on_indication(&mut self, indication: &IndicationMsg) -> Result<ControlMsg, RicError> {
        let start = Instant::now();
        let windows = indication
            .all_windows()
            .ok_or_else(|| RicError::IncompleteIndication(indication.xapp_id.clone()))?;
        let action = self.decide(&windows)?;
        self.max_latency = self.max_latency.max(start.elapsed());
        Ok(ControlMsg {
            xapp_id: self.descriptor.xapp_id.clone(),
            seq: indication.seq,
            partition: action.partition.filter(|_| self.descriptor.controlled.covers_partition()),
            assignment: action.assignment.filter(|_| self.descriptor.controlled.covers_assignment()),
        })
    }
}

/// Registry of xApps with the disjoint-parameter rule enforced on entry.
#[derive(Clone, Debug, Default)]
pub struct Runtime {
    xapps: Vec<XappDescriptor>,
}

impl Runtime {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn xapps(&self) -> &[XappDescriptor] {
        &self.xapps
    }

    pub fn subscribe(&mut self, descriptor: XappDescriptor) -> Result<usize, RicError> {
        descriptor.subscription.validate()?;
        for other in &self.xapps {
            if other.xapp_id == descriptor.xapp_id {
                return Err(RicError::DuplicateXapp(descriptor.xapp_id));
            }
            if other.controlled.overlaps(descriptor.controlled) {
                return Err(RicError::Conflict {
                    existing: other.xapp_id.clone(),
                    incoming: descriptor.xapp_id,
                });
            }
        }
        self.xapps.push(descriptor);
        Ok(self.xapps.len() - 1)
    }

    pub fn find(&self, xapp_id: &str) -> Option<&XappDescriptor> {
        self.xapps.iter().find(|x| x.xapp_id == xapp_id)
    }

    /// Checks the controls of one TTI against the registry and returns them
    /// in application order.
    pub fn resolve_controls(&self, pending: &[ControlMsg]) -> Result<Vec<ControlAction>, RicError> {
        let mut partition_by: Option<&str> = None;
        let mut assignment_by: Option<&str> = None;
        let mut out = Vec::with_capacity(pending.len());
        for c in pending {
            let x = self
                .find(&c.xapp_id)
                .ok_or_else(|| RicError::UnknownXapp(c.xapp_id.clone()))?;
            if !x.controlled.permits(c) {
                return Err(RicError::ParameterViolation(c.xapp_id.clone()));
            }
            for (touched, owner) in [
                (c.partition.is_some(), &mut partition_by),
                (c.assignment.is_some(), &mut assignment_by),
            ] {
                if touched {
                    if let Some(prev) = owner {
                        return Err(RicError::Conflict {
                            existing: prev.to_string(),
                            incoming: c.xapp_id.clone(),
                        });
                    }
                    *owner = Some(&c.xapp_id);
                }
            }
            out.push(ControlAction {
                partition: c.partition,
                assignment: c.assignment,
            });
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub duration_tti: u64,
    /// TTIs between rows of the metric log.
    pub log_interval_tti: u64,
}

impl LoopConfig {
    pub fn new(duration_tti: u64) -> Self {
        LoopConfig {
            duration_tti,
            log_interval_tti: 100,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoopStats {
    pub indications: BTreeMap<String, u64>,
    pub controls_applied: u64,
    pub max_decision_latency: Duration,
}

/// Advances the cell TTI by TTI. Indications go out when an xApp's window
/// completes; the controls they return take effect from the next TTI.
pub fn run_control_loop(
    bs: &mut BsState,
    xapps: &mut [&mut dyn XappEndpoint],
    cfg: &LoopConfig,
) -> Result<(MetricLog, LoopStats), RicError> {
    if cfg.log_interval_tti == 0 {
        return Err(RicError::InvalidPeriod(0));
    }
    let mut runtime = Runtime::new();
    for x in xapps.iter() {
        runtime.subscribe(x.descriptor().clone())?;
    }
    let mut collectors: Vec<KpmCollector> = runtime
        .xapps()
        .iter()
        .map(|d| KpmCollector::new(bs, d.subscription.sample_interval()))
        .collect();
    let mut seqs = vec![0u64; xapps.len()];
    let mut log = MetricLog::new();
    let mut stats = LoopStats::default();
    let mut log_since = bs.snapshot();
    let mut pending: Vec<ControlMsg> = Vec::new();

    for _ in 0..cfg.duration_tti {
        if !pending.is_empty() {
            let actions = runtime.resolve_controls(&pending)?;
            for (c, a) in pending.drain(..).zip(actions) {
                bs.apply_control(a.partition, a.assignment)?;
                stats.controls_applied += 1;
                log.push_action(ActionRecord {
                    tti: bs.tti_counter + 1,
                    xapp_id: c.xapp_id,
                    seq: c.seq,
                    partition: c.partition,
                    assignment: c.assignment,
                });
            }
        }
        bs.serve_tti();
        if (bs.tti_counter - log_since.tti).is_multiple_of(cfg.log_interval_tti) {
            for slice in SliceKind::ALL {
                log.push_row(LogRow {
                    sample: bs.measure_kpm(slice, &log_since)?,
                    partition: bs.partition(),
                    assignment: bs.assignment(),
                });
            }
            log_since = bs.snapshot();
        }
        for (i, x) in xapps.iter_mut().enumerate() {
            let Some(windows) = collectors[i].on_tti(bs)? else {
                continue;
            };
            seqs[i] += 1;
            let sub = &runtime.xapps()[i].subscription;
            let chosen: Vec<KpmWindow> = windows.into_iter().filter(|w| sub.slices.contains(&w.slice)).collect();
            let indication = IndicationMsg::new(&sub.xapp_id, seqs[i], bs.tti_counter, &chosen);
            *stats.indications.entry(sub.xapp_id.clone()).or_default() += 1;
            let start = Instant::now();
            let control = x.on_indication(&indication)?;
            stats.max_decision_latency = stats.max_decision_latency.max(start.elapsed());
            if control.xapp_id != sub.xapp_id || control.seq != seqs[i] {
                return Err(RicError::ProtocolViolation(format!(
                    "{} answered indication {} with control {}/{}",
                    sub.xapp_id, seqs[i], control.xapp_id, control.seq
                )));
            }
            if control.partition.is_some() || control.assignment.is_some() {
                pending.push(control);
            }
        }
    }
    Ok((log, stats))
}
