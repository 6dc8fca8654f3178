use std::collections::BTreeSet;

use meg_core::EventLog;

use crate::error::{CliError, Result};

/// Event and edge counts on either side of a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSummary {
    pub train_events: usize,
    pub test_events: usize,
    pub train_edges: usize,
    pub test_edges: usize,
    /// Edges with events on both sides.
    pub shared_edges: usize,
    /// Edges seen in the test window only.
    pub new_edges: usize,
    pub train_only_edges: usize,
}

impl SplitSummary {
    pub fn lines(&self) -> Vec<(String, String)> {
        [
            ("train_events", self.train_events),
            ("test_events", self.test_events),
            ("train_edges", self.train_edges),
            ("test_edges", self.test_edges),
            ("shared_edges", self.shared_edges),
            ("new_edges", self.new_edges),
            ("train_only_edges", self.train_only_edges),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
    }
}

fn edge_set(log: &EventLog) -> BTreeSet<(usize, usize)> {
    log.events().iter().map(|e| (e.src, e.dst)).collect()
}

/// Training gets `t <= at`, test gets `t > at`.
pub fn split(log: &EventLog, at: f64) -> Result<(EventLog, EventLog, SplitSummary)> {
    if !(at > 0.0 && at < log.horizon()) {
        return Err(CliError::Config(format!(
            "split time {at} must lie strictly inside (0, {})",
            log.horizon()
        )));
    }
    let (train, test) = log.split_at(at)?;
    if train.is_empty() || test.is_empty() {
        log::warn!(
            "split at {at} leaves {} training and {} test events",
            train.len(),
            test.len()
        );
    }
    let (a, b) = (edge_set(&train), edge_set(&test));
    let shared = a.intersection(&b).count();
    let summary = SplitSummary {
        train_events: train.len(),
        test_events: test.len(),
        train_edges: a.len(),
        test_edges: b.len(),
        shared_edges: shared,
        new_edges: b.len() - shared,
        train_only_edges: a.len() - shared,
    };
    Ok((train, test, summary))
}
