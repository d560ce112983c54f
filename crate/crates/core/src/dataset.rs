//! In-memory feature tables: one row per sensor window.

use std::collections::BTreeSet;

use crate::activity::Activity;
use crate::spectral::Task;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub participant: String,
    pub activity: Activity,
    pub window_start: f64,
    /// Power in mW (intensity) or 0/1 (detection); `None` when unlabeled.
    pub target: Option<f64>,
    /// Unnormalized features.
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub task: Task,
    pub samples: Vec<Sample>,
}

impl FeatureTable {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Participant ids in sorted order.
    pub fn participants(&self) -> Vec<String> {
        self.samples
            .iter()
            .map(|s| s.participant.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Rows that carry a target.
    pub fn labeled(&self) -> FeatureTable {
        FeatureTable {
            task: self.task,
            samples: self
                .samples
                .iter()
                .filter(|s| s.target.is_some())
                .cloned()
                .collect(),
        }
    }
}
