use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sim::{PrbPartition, SchedulerAssignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionSpaceKind {
    #[serde(rename = "slicing")]
    SlicingOnly,
    #[serde(rename = "scheduling")]
    SchedulingOnly,
    Joint,
}

impl ActionSpaceKind {
    pub const ALL: [ActionSpaceKind; 3] = [
        ActionSpaceKind::SlicingOnly,
        ActionSpaceKind::SchedulingOnly,
        ActionSpaceKind::Joint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionSpaceKind::SlicingOnly => "slicing",
            ActionSpaceKind::SchedulingOnly => "scheduling",
            ActionSpaceKind::Joint => "joint",
        }
    }

    pub fn controls_partition(self) -> bool {
        self != ActionSpaceKind::SchedulingOnly
    }

    pub fn controls_assignment(self) -> bool {
        self != ActionSpaceKind::SlicingOnly
    }
}

impl fmt::Display for ActionSpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One control decision: a new partition, a new scheduler assignment, or both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ControlAction {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub partition: Option<PrbPartition>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub assignment: Option<SchedulerAssignment>,
}

impl fmt::Display for ControlAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.partition, self.assignment) {
            (Some(p), Some(a)) => write!(f, "{p} {a}"),
            (Some(p), None) => write!(f, "{p}"),
            (None, Some(a)) => write!(f, "{a}"),
            (None, None) => f.write_str("-"),
        }
    }
}

/// Ordered catalog of discrete actions. Joint indices are partition-major:
/// `partition_index * 27 + assignment_index`.
#[derive(Clone, Debug)]
pub struct ActionSpace {
    kind: ActionSpaceKind,
    catalog: Vec<ControlAction>,
    index: HashMap<ControlAction, usize>,
}

impl ActionSpace {
    pub fn new(kind: ActionSpaceKind) -> Self {
        let partitions = PrbPartition::catalog();
        let assignments = SchedulerAssignment::catalog();
        let catalog: Vec<ControlAction> = match kind {
            ActionSpaceKind::SlicingOnly => partitions
                .into_iter()
                .map(|p| ControlAction {
                    partition: Some(p),
                    assignment: None,
                })
                .collect(),
            ActionSpaceKind::SchedulingOnly => assignments
                .into_iter()
                .map(|a| ControlAction {
                    partition: None,
                    assignment: Some(a),
                })
                .collect(),
            ActionSpaceKind::Joint => partitions
                .iter()
                .flat_map(|&p| {
                    assignments.iter().map(move |&a| ControlAction {
                        partition: Some(p),
                        assignment: Some(a),
                    })
                })
                .collect(),
        };
        let index = catalog.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        ActionSpace {
            kind,
            catalog,
            index,
        }
    }

    pub fn kind(&self) -> ActionSpaceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.catalog.len()
    }

    pub fn is_empty(&self) -> bool {
        self.catalog.is_empty()
    }

    pub fn catalog(&self) -> &[ControlAction] {
        &self.catalog
    }

    pub fn decode(&self, index: usize) -> Option<ControlAction> {
        self.catalog.get(index).copied()
    }

    pub fn encode(&self, action: &ControlAction) -> Option<usize> {
        self.index.get(action).copied()
    }
}
