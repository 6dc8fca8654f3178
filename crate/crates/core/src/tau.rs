//! Edge changepoints: the time after which an edge can fire.

use std::collections::BTreeMap;

use crate::events::{EventIndex, GraphKind, GraphShape};
use crate::model::TauStrategy;

/// Per-edge start times. Most edges share `default`; the rest are listed.
#[derive(Debug, Clone, PartialEq)]
pub struct TauMatrix {
    kind: GraphKind,
    default: f64,
    overrides: BTreeMap<(usize, usize), f64>,
}

impl TauMatrix {
    /// Every edge starting at `value` (use `f64::INFINITY` for never).
    pub fn uniform(kind: GraphKind, value: f64) -> Self {
        Self {
            kind,
            default: value,
            overrides: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn get(&self, src: usize, dst: usize) -> f64 {
        self.overrides.get(&(src, dst)).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, src: usize, dst: usize, tau: f64) {
        if tau == self.default {
            self.overrides.remove(&(src, dst));
        } else {
            self.overrides.insert((src, dst), tau);
        }
    }

    /// Calls `f(src, dst, tau)` for every edge with `tau < horizon`, in
    /// `(src, dst)` order.
    pub fn for_each_active(&self, horizon: f64, mut f: impl FnMut(usize, usize, f64)) {
        if self.default < horizon {
            for i in 0..self.kind.n_src() {
                for j in 0..self.kind.n_dst() {
                    let tau = self.get(i, j);
                    if tau < horizon {
                        f(i, j, tau);
                    }
                }
            }
        } else {
            for (&(i, j), &tau) in &self.overrides {
                if tau < horizon {
                    f(i, j, tau);
                }
            }
        }
    }

    pub fn active_edges(&self, horizon: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        self.for_each_active(horizon, |i, j, tau| out.push((i, j, tau)));
        out
    }
}

/// Start times under one of the three changepoint strategies.
pub fn estimate_tau(index: &EventIndex, shape: &GraphShape, strategy: TauStrategy) -> TauMatrix {
    match strategy {
        TauStrategy::Zero => TauMatrix::uniform(shape.kind, 0.0),
        TauStrategy::Mle => {
            let mut tau = TauMatrix::uniform(shape.kind, f64::INFINITY);
            for edge in index.edges() {
                tau.set(edge.src, edge.dst, edge.times[0]);
            }
            tau
        }
        TauStrategy::Adjacency => {
            let mut tau = TauMatrix::uniform(shape.kind, f64::INFINITY);
            for &(i, j) in shape.adjacency() {
                tau.set(i, j, 0.0);
            }
            tau
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, EventLog};

    fn fixture() -> (EventIndex, GraphShape) {
        let events = vec![Event::new(3.2, 0, 1), Event::new(5.1, 0, 1), Event::new(6.0, 1, 1)];
        let log = EventLog::new(events, 10.0, 0.0).unwrap();
        let kind = GraphKind::Directed { n: 2 };
        (
            EventIndex::build(&log, kind).unwrap(),
            GraphShape::from_log(kind, &log).unwrap(),
        )
    }

    #[test]
    fn mle_is_first_event_or_infinity() {
        let (index, shape) = fixture();
        let tau = estimate_tau(&index, &shape, TauStrategy::Mle);
        assert_eq!(tau.get(0, 1), 3.2);
        assert_eq!(tau.get(1, 1), 6.0);
        assert_eq!(tau.get(1, 0), f64::INFINITY);
        assert_eq!(tau.active_edges(10.0).len(), 2);
    }

    #[test]
    fn adjacency_and_zero() {
        let (index, shape) = fixture();
        let tau = estimate_tau(&index, &shape, TauStrategy::Adjacency);
        assert_eq!(tau.get(0, 1), 0.0);
        assert_eq!(tau.get(0, 0), f64::INFINITY);
        let tau = estimate_tau(&index, &shape, TauStrategy::Zero);
        assert_eq!(tau.get(1, 0), 0.0);
        assert_eq!(tau.active_edges(10.0).len(), 4);
    }

    #[test]
    fn edges_starting_after_horizon_are_inactive() {
        let mut tau = TauMatrix::uniform(GraphKind::Directed { n: 2 }, 0.0);
        tau.set(1, 1, 20.0);
        assert_eq!(tau.active_edges(10.0).len(), 3);
    }
}
