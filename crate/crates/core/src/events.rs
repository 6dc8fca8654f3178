//! Event logs, graph shapes and the per-node / per-edge event index.

use std::collections::{BTreeSet, HashMap};

use crate::error::{MegError, Result};

/// One directed interaction `src -> dst` at `time` (seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub src: usize,
    pub dst: usize,
}

impl Event {
    pub fn new(time: f64, src: usize, dst: usize) -> Self {
        Self { time, src, dst }
    }
}

/// Returns true when an event at `source_time` excites the intensity at `t`.
///
/// With `dt == 0` only strictly earlier events count; otherwise an event
/// contributes from `source_time + dt` onwards.
#[inline]
pub fn excites(source_time: f64, t: f64, dt: f64) -> bool {
    t > source_time && t - source_time >= dt
}

/// Time-ordered event stream observed on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
    horizon: f64,
    dt: f64,
}

impl EventLog {
    /// Builds a log, checking times are finite, nonnegative, nondecreasing
    /// and inside the horizon. Order among equal times is kept as given.
    pub fn new(events: Vec<Event>, horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(MegError::InvalidLog(format!(
                "horizon {horizon} must be finite and >= 0"
            )));
        }
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(MegError::InvalidLog(format!("tie offset {dt} must be finite and >= 0")));
        }
        let mut prev = 0.0;
        for (k, e) in events.iter().enumerate() {
            if !(e.time.is_finite() && e.time >= 0.0) {
                return Err(MegError::InvalidLog(format!("event #{k} has invalid time {}", e.time)));
            }
            if e.time < prev {
                return Err(MegError::InvalidLog(format!(
                    "event #{k} at t = {} precedes the previous event at t = {prev}",
                    e.time
                )));
            }
            if e.time > horizon {
                return Err(MegError::InvalidLog(format!(
                    "event #{k} at t = {} lies beyond the horizon {horizon}",
                    e.time
                )));
            }
            prev = e.time;
        }
        Ok(Self { events, horizon, dt })
    }

    /// Sorts by time (stable) before validating.
    pub fn from_unsorted(mut events: Vec<Event>, horizon: f64, dt: f64) -> Result<Self> {
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self::new(events, horizon, dt)
    }

    pub fn empty(horizon: f64, dt: f64) -> Result<Self> {
        Self::new(Vec::new(), horizon, dt)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Same events observed over a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.events.clone(), horizon, self.dt)
    }

    /// First `m` events, with the horizon moved to the last retained time.
    pub fn truncated(&self, m: usize) -> Self {
        let events: Vec<Event> = self.events.iter().take(m).copied().collect();
        let horizon = events.last().map_or(0.0, |e| e.time);
        Self {
            events,
            horizon,
            dt: self.dt,
        }
    }

    /// Events with `t <= split` and events with `t > split`.
    pub fn split_at(&self, split: f64) -> Result<(Self, Self)> {
        let cut = self.events.partition_point(|e| e.time <= split);
        let train = Self::new(self.events[..cut].to_vec(), split.min(self.horizon), self.dt)?;
        let test = Self::new(self.events[cut..].to_vec(), self.horizon, self.dt)?;
        Ok((train, test))
    }

    /// Concatenation of two consecutive windows.
    pub fn concat(first: &Self, second: &Self) -> Result<Self> {
        let mut events = first.events.clone();
        events.extend_from_slice(&second.events);
        Self::new(events, first.horizon.max(second.horizon), first.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    /// Sources and destinations share one node set of size `n`.
    Directed { n: usize },
    /// Sources in `0..n_src`, destinations in `0..n_dst`.
    Bipartite { n_src: usize, n_dst: usize },
}

impl GraphKind {
    pub fn n_src(&self) -> usize {
        match *self {
            GraphKind::Directed { n } => n,
            GraphKind::Bipartite { n_src, .. } => n_src,
        }
    }

    pub fn n_dst(&self) -> usize {
        match *self {
            GraphKind::Directed { n } => n,
            GraphKind::Bipartite { n_dst, .. } => n_dst,
        }
    }

    pub fn n_edges(&self) -> usize {
        self.n_src() * self.n_dst()
    }
}

/// Node sets plus the adjacency observed in training data.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphShape {
    pub kind: GraphKind,
    adjacency: BTreeSet<(usize, usize)>,
}

impl GraphShape {
    pub fn new(kind: GraphKind) -> Self {
        Self {
            kind,
            adjacency: BTreeSet::new(),
        }
    }

    pub fn directed(n: usize) -> Self {
        Self::new(GraphKind::Directed { n })
    }

    pub fn bipartite(n_src: usize, n_dst: usize) -> Self {
        Self::new(GraphKind::Bipartite { n_src, n_dst })
    }

    /// Shape whose adjacency is every edge with at least one event in `log`.
    pub fn from_log(kind: GraphKind, log: &EventLog) -> Result<Self> {
        let mut shape = Self::new(kind);
        for (position, e) in log.events().iter().enumerate() {
            shape.check_event(position, e)?;
            shape.adjacency.insert((e.src, e.dst));
        }
        Ok(shape)
    }

    /// Replaces the adjacency with the edges observed in `log`.
    pub fn with_adjacency_from(&self, log: &EventLog) -> Result<Self> {
        Self::from_log(self.kind, log)
    }

    pub fn n_src(&self) -> usize {
        self.kind.n_src()
    }

    pub fn n_dst(&self) -> usize {
        self.kind.n_dst()
    }

    pub fn is_adjacent(&self, src: usize, dst: usize) -> bool {
        self.adjacency.contains(&(src, dst))
    }

    pub fn adjacency(&self) -> &BTreeSet<(usize, usize)> {
        &self.adjacency
    }

    pub fn check_event(&self, position: usize, e: &Event) -> Result<()> {
        if e.src >= self.n_src() || e.dst >= self.n_dst() {
            return Err(MegError::NodeOutOfRange {
                position,
                event: *e,
                detail: format!("sources 0..{}, destinations 0..{}", self.n_src(), self.n_dst()),
            });
        }
        Ok(())
    }
}

/// Events observed on one edge, aligned with the node sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEvents {
    pub src: usize,
    pub dst: usize,
    pub times: Vec<f64>,
    /// Position of each edge event inside the source node's sequence.
    pub src_pos: Vec<usize>,
    /// Position of each edge event inside the destination node's sequence.
    pub dst_pos: Vec<usize>,
}

impl EdgeEvents {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Per-node and per-edge views of an event log, built in a single pass.
#[derive(Debug, Clone)]
pub struct EventIndex {
    src_times: Vec<Vec<f64>>,
    dst_times: Vec<Vec<f64>>,
    edges: Vec<EdgeEvents>,
    lookup: HashMap<(usize, usize), usize>,
    horizon: f64,
    dt: f64,
    n_events: usize,
}

impl EventIndex {
    pub fn build(log: &EventLog, kind: GraphKind) -> Result<Self> {
        let shape = GraphShape::new(kind);
        let mut src_times = vec![Vec::new(); kind.n_src()];
        let mut dst_times = vec![Vec::new(); kind.n_dst()];
        let mut edges: Vec<EdgeEvents> = Vec::new();
        let mut lookup = HashMap::new();
        for (position, e) in log.events().iter().enumerate() {
            shape.check_event(position, e)?;
            let slot = *lookup.entry((e.src, e.dst)).or_insert_with(|| {
                edges.push(EdgeEvents {
                    src: e.src,
                    dst: e.dst,
                    times: Vec::new(),
                    src_pos: Vec::new(),
                    dst_pos: Vec::new(),
                });
                edges.len() - 1
            });
            let edge = &mut edges[slot];
            edge.times.push(e.time);
            edge.src_pos.push(src_times[e.src].len());
            edge.dst_pos.push(dst_times[e.dst].len());
            src_times[e.src].push(e.time);
            dst_times[e.dst].push(e.time);
        }
        edges.sort_by_key(|edge| (edge.src, edge.dst));
        let lookup = edges
            .iter()
            .enumerate()
            .map(|(slot, edge)| ((edge.src, edge.dst), slot))
            .collect();
        Ok(Self {
            src_times,
            dst_times,
            edges,
            lookup,
            horizon: log.horizon(),
            dt: log.dt(),
            n_events: log.len(),
        })
    }

    pub fn n_src(&self) -> usize {
        self.src_times.len()
    }

    pub fn n_dst(&self) -> usize {
        self.dst_times.len()
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Times at which `i` appears as a source.
    pub fn src_times(&self, i: usize) -> &[f64] {
        &self.src_times[i]
    }

    /// Times at which `j` appears as a destination.
    pub fn dst_times(&self, j: usize) -> &[f64] {
        &self.dst_times[j]
    }

    /// Edges with at least one event, sorted by `(src, dst)`.
    pub fn edges(&self) -> &[EdgeEvents] {
        &self.edges
    }

    pub fn edge(&self, src: usize, dst: usize) -> Option<&EdgeEvents> {
        self.lookup.get(&(src, dst)).map(|&slot| &self.edges[slot])
    }

    pub fn edge_count(&self, src: usize, dst: usize) -> usize {
        self.edge(src, dst).map_or(0, EdgeEvents::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(events: &[(f64, usize, usize)], horizon: f64) -> EventLog {
        let events = events.iter().map(|&(t, s, d)| Event::new(t, s, d)).collect();
        EventLog::new(events, horizon, 0.0).unwrap()
    }

    #[test]
    fn counts_and_alignment_for_small_log() {
        // nodes 1, 2 of the worked example are 0, 1 here
        let log = log(&[(1.0, 0, 1), (2.0, 0, 1), (3.0, 1, 0)], 5.0);
        let index = EventIndex::build(&log, GraphKind::Directed { n: 2 }).unwrap();
        assert_eq!(index.edge_count(0, 1), 2);
        assert_eq!(index.edge_count(1, 0), 1);
        assert_eq!(index.src_times(0).len(), 2);
        assert_eq!(index.dst_times(1).len(), 2);
        assert_eq!(index.edge(0, 1).unwrap().src_pos, vec![0, 1]);
        assert_eq!(index.edge(0, 1).unwrap().dst_pos, vec![0, 1]);
        assert_eq!(index.edge_count(0, 0), 0);
    }

    #[test]
    fn empty_log_has_no_edges() {
        let log = EventLog::empty(10.0, 0.0).unwrap();
        let index = EventIndex::build(&log, GraphKind::Directed { n: 3 }).unwrap();
        assert!(index.edges().is_empty());
        assert!((0..3).all(|i| index.src_times(i).is_empty() && index.dst_times(i).is_empty()));
    }

    #[test]
    fn rejects_out_of_range_nodes() {
        let log = log(&[(1.0, 0, 1), (2.0, 0, 7)], 5.0);
        let err = EventIndex::build(&log, GraphKind::Directed { n: 2 }).unwrap_err();
        match err {
            MegError::NodeOutOfRange { position, event, .. } => {
                assert_eq!(position, 1);
                assert_eq!(event.dst, 7);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn bipartite_ranges_are_separate() {
        let log = log(&[(1.0, 0, 4), (2.0, 1, 0)], 5.0);
        assert!(EventIndex::build(&log, GraphKind::Bipartite { n_src: 2, n_dst: 5 }).is_ok());
        assert!(EventIndex::build(&log, GraphKind::Bipartite { n_src: 1, n_dst: 5 }).is_err());
    }

    #[test]
    fn log_validation() {
        assert!(EventLog::new(vec![Event::new(2.0, 0, 0), Event::new(1.0, 0, 0)], 5.0, 0.0).is_err());
        assert!(EventLog::new(vec![Event::new(6.0, 0, 0)], 5.0, 0.0).is_err());
        assert!(EventLog::new(vec![Event::new(-1.0, 0, 0)], 5.0, 0.0).is_err());
        let sorted = EventLog::from_unsorted(vec![Event::new(2.0, 0, 1), Event::new(1.0, 1, 0)], 5.0, 0.0).unwrap();
        assert_eq!(sorted.events()[0].time, 1.0);
    }

    #[test]
    fn excitation_rule_with_ties() {
        assert!(!excites(1.0, 1.0, 0.0));
        assert!(excites(1.0, 1.0 + 1e-9, 0.0));
        assert!(!excites(1.0, 1.5, 1.0));
        assert!(excites(1.0, 2.0, 1.0));
    }

    #[test]
    fn split_keeps_boundary_event_in_training() {
        let log = log(&[(1.0, 0, 1), (2.0, 0, 1), (3.0, 1, 0)], 5.0);
        let (train, test) = log.split_at(2.0).unwrap();
        assert_eq!(train.len(), 2);
        assert_eq!(test.len(), 1);
        assert_eq!(train.horizon(), 2.0);
        assert_eq!(test.horizon(), 5.0);
    }
}
