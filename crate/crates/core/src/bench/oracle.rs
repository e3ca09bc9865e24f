//! Reference points for judging trained policies: exhaustive static
//! partitions and a uniformly random controller.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::stats::median;
use super::BenchError;
use crate::agent::{ActionSpace, ActionSpaceKind};
use crate::metrics::{Metric, MetricLog};
use crate::ric::{run_control_loop, ControlMsg, IndicationMsg, LoopConfig, RicError, XappDescriptor, XappEndpoint};
use crate::sim::{BsState, PrbPartition, Scenario, SliceKind};

/// Open-loop log of the cell held at `partition` for `duration_s`.
pub fn static_run(scenario: &Scenario, partition: PrbPartition, seed: u64, duration_s: u64) -> Result<MetricLog, BenchError> {
    let mut bs = BsState::new(scenario, seed)?;
    bs.apply_control(Some(partition), None)?;
    let mut none: Vec<&mut dyn XappEndpoint> = Vec::new();
    Ok(run_control_loop(&mut bs, &mut none, &LoopConfig::new(duration_s * 1000))?.0)
}

/// Median of one slice metric for every catalog partition held fixed,
/// pooled over `seeds`.
pub fn static_partition_medians(
    scenario: &Scenario,
    slice: SliceKind,
    metric: Metric,
    seeds: &[u64],
    duration_s: u64,
) -> Result<Vec<(PrbPartition, f64)>, BenchError> {
    PrbPartition::catalog()
        .into_iter()
        .map(|p| {
            let mut values = Vec::new();
            for &seed in seeds {
                values.extend(static_run(scenario, p, seed, duration_s)?.values(slice, metric));
            }
            Ok((p, median(&values)?))
        })
        .collect()
}

/// Picks a uniformly random catalog entry at every indication.
#[derive(Clone, Debug)]
pub struct RandomXapp {
    descriptor: XappDescriptor,
    space: ActionSpace,
    rng: ChaCha8Rng,
}

impl RandomXapp {
    pub fn new(xapp_id: &str, kind: ActionSpaceKind, period_ms: u64, seed: u64) -> Self {
        RandomXapp {
            descriptor: XappDescriptor::new(xapp_id, kind.into(), period_ms),
            space: ActionSpace::new(kind),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl XappEndpoint for RandomXapp {
    fn descriptor(&self) -> &XappDescriptor {
        &self.descriptor
    }

    fn on_indication(&mut self, indication: &IndicationMsg) -> Result<ControlMsg, RicError> {
        let a = self
            .space
            .decode(self.rng.random_range(0..self.space.len()))
            .expect("index within catalog");
        Ok(ControlMsg {
            xapp_id: self.descriptor.xapp_id.clone(),
            seq: indication.seq,
            partition: a.partition,
            assignment: a.assignment,
        })
    }
}
