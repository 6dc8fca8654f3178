//! Exact simulation by thinning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{MegError, Result};
use crate::events::{Event, EventLog, GraphShape};
use crate::model::{Memory, ModelSpec};
use crate::params::{Layout, Params};
use crate::scalar::Real;
use crate::tau::TauMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub seed: u64,
    /// Independent stream under the same seed, e.g. the replication number.
    pub stream: u64,
    pub max_events: usize,
}

impl SimConfig {
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self {
            horizon,
            seed,
            stream: 0,
            max_events: 10_000_000,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_max_events(mut self, max_events: usize) -> Self {
        self.max_events = max_events;
        self
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Exponentially decaying sum, stored as its value right after the last update.
#[derive(Debug, Clone, Copy, Default)]
struct Decaying {
    at: f64,
    level: f64,
}

impl Decaying {
    fn value(&self, rate: f64, t: f64) -> f64 {
        self.level * (-rate * (t - self.at).max(0.0)).exp()
    }

    fn hit(&mut self, rate: f64, t: f64, memory: Memory) {
        self.level = match memory {
            Memory::Hawkes => self.value(rate, t) + 1.0,
            _ => 1.0,
        };
        self.at = t;
    }
}

struct Simulator<'p> {
    params: &'p Params<f64>,
    spec: ModelSpec,
    n_dst: usize,
    dim: usize,
    src: Vec<Decaying>,
    dst: Vec<Decaying>,
    edge: Vec<Decaying>,
    /// Edges with `tau < horizon`, ordered by activation time.
    schedule: Vec<(f64, usize, usize)>,
    active: usize,
}

impl Simulator<'_> {
    fn intensity(&self, i: usize, j: usize, t: f64) -> f64 {
        let p = self.params;
        let mut lambda = p.baseline(i, j);
        if let Some(Memory::Markov | Memory::Hawkes) = self.spec.main {
            lambda += p.mu[i] * self.src[i].value(p.src_decay(i), t);
            lambda += p.mu_dst[j] * self.dst[j].value(p.dst_decay(j), t);
        }
        if let Some(Memory::Markov | Memory::Hawkes) = self.spec.interaction {
            let e = (i * self.n_dst + j) * self.dim;
            for q in 0..self.dim {
                lambda += p.interaction_jump(i, j, q) * self.edge[e + q].value(p.interaction_decay(i, j, q), t);
            }
        }
        lambda
    }

    fn total(&self, t: f64) -> f64 {
        self.schedule[..self.active]
            .iter()
            .map(|&(_, i, j)| self.intensity(i, j, t))
            .sum()
    }

    fn record(&mut self, i: usize, j: usize, t: f64) {
        let p = self.params;
        if let Some(m @ (Memory::Markov | Memory::Hawkes)) = self.spec.main {
            self.src[i].hit(p.src_decay(i), t, m);
            self.dst[j].hit(p.dst_decay(j), t, m);
        }
        if let Some(m @ (Memory::Markov | Memory::Hawkes)) = self.spec.interaction {
            let e = (i * self.n_dst + j) * self.dim;
            for q in 0..self.dim {
                self.edge[e + q].hit(p.interaction_decay(i, j, q), t, m);
            }
        }
    }

    fn activate_through(&mut self, t: f64) {
        while self.active < self.schedule.len() && self.schedule[self.active].0 <= t {
            self.active += 1;
        }
    }

    /// Runs until `horizon` or until `stop_after` events, whichever comes first.
    fn run(
        &mut self,
        rng: &mut ChaCha8Rng,
        horizon: f64,
        stop_after: Option<usize>,
        max_events: usize,
    ) -> std::result::Result<Vec<Event>, Vec<Event>> {
        let mut events = Vec::new();
        let mut t = 0.0;
        self.activate_through(t);
        loop {
            if stop_after.is_some_and(|n| events.len() >= n) {
                return Ok(events);
            }
            let next_activation = self.schedule.get(self.active).map_or(f64::INFINITY, |s| s.0);
            let bound = self.total(t);
            let candidate = if bound > 0.0 {
                let wait: f64 = rng.sample(Exp1);
                t + wait / bound
            } else {
                f64::INFINITY
            };
            if candidate >= next_activation && next_activation < horizon {
                t = next_activation;
                self.activate_through(t);
                continue;
            }
            if candidate > horizon || !candidate.is_finite() {
                return Ok(events);
            }
            t = candidate;
            let mut u = rng.random::<f64>() * bound;
            let mut chosen = None;
            for &(_, i, j) in &self.schedule[..self.active] {
                let lambda = self.intensity(i, j, t);
                if u < lambda {
                    chosen = Some((i, j));
                    break;
                }
                u -= lambda;
            }
            if let Some((i, j)) = chosen {
                if events.len() >= max_events {
                    return Err(events);
                }
                events.push(Event::new(t, i, j));
                self.record(i, j, t);
            }
        }
    }
}

fn prepare<'p>(
    params: &'p Params<f64>,
    tau: &TauMatrix,
    spec: ModelSpec,
    shape: &GraphShape,
    horizon: f64,
) -> Result<Simulator<'p>> {
    spec.validate()?;
    params.validate(&Layout::new(shape.kind, spec))?;
    if tau.kind() != shape.kind {
        return Err(MegError::InvalidConfig(
            "changepoint matrix does not match the graph".into(),
        ));
    }
    let mut schedule: Vec<(f64, usize, usize)> = tau
        .active_edges(horizon)
        .into_iter()
        .map(|(i, j, t)| (t.max(0.0), i, j))
        .collect();
    schedule.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let (n_src, n_dst) = (shape.kind.n_src(), shape.kind.n_dst());
    let dim = if spec.interaction_excites() { spec.dim } else { 0 };
    Ok(Simulator {
        params,
        spec,
        n_dst,
        dim,
        src: vec![Decaying::default(); n_src],
        dst: vec![Decaying::default(); n_dst],
        edge: vec![Decaying::default(); n_src * n_dst * dim],
        schedule,
        active: 0,
    })
}

/// Simulates events on `[0, cfg.horizon]`. Edges with `tau = inf` never fire.
pub fn simulate<S: Real>(
    params: &Params<S>,
    tau: &TauMatrix,
    spec: ModelSpec,
    shape: &GraphShape,
    cfg: SimConfig,
) -> Result<EventLog> {
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
        return Err(MegError::InvalidConfig(format!(
            "simulation horizon must be positive, got {}",
            cfg.horizon
        )));
    }
    if cfg.max_events == 0 {
        return Err(MegError::InvalidConfig("max_events must be positive".into()));
    }
    let params = params.cast::<f64>();
    let mut sim = prepare(&params, tau, spec, shape, cfg.horizon)?;
    match sim.run(&mut cfg.rng(), cfg.horizon, None, cfg.max_events) {
        Ok(events) => EventLog::new(events, cfg.horizon, 0.0),
        Err(events) => {
            let end = events.last().map_or(0.0, |e| e.time);
            Err(MegError::SimulationTruncated {
                max_events: cfg.max_events,
                partial: Box::new(EventLog::new(events, end, 0.0)?),
            })
        }
    }
}

/// Simulates exactly `n` events; the horizon of the returned log is the last event time.
///
/// `cfg.horizon` is ignored. Fails if the process stops producing events.
pub fn simulate_events<S: Real>(
    params: &Params<S>,
    tau: &TauMatrix,
    spec: ModelSpec,
    shape: &GraphShape,
    cfg: SimConfig,
    n: usize,
) -> Result<EventLog> {
    let params = params.cast::<f64>();
    let mut sim = prepare(&params, tau, spec, shape, f64::INFINITY)?;
    let events = sim
        .run(&mut cfg.rng(), f64::INFINITY, Some(n), usize::MAX)
        .unwrap_or_else(|partial| partial);
    if events.len() < n {
        return Err(MegError::InvalidConfig(format!(
            "process stopped after {} of {n} requested events",
            events.len()
        )));
    }
    let end = events.last().map_or(0.0, |e| e.time);
    EventLog::new(events, end, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::GraphKind;
    use crate::model::TauStrategy;
    use crate::params::Block;

    #[test]
    fn deterministic_and_stream_dependent() {
        let shape = GraphShape::directed(2);
        let spec = ModelSpec::main_only(Memory::Hawkes, TauStrategy::Zero);
        let params = Params::from_fn(&Layout::new(shape.kind, spec), |block, _, _| match block {
            Block::Phi | Block::PhiDst => 0.9_f64,
            _ => 0.1,
        });
        let tau = TauMatrix::uniform(shape.kind, 0.0);
        let cfg = SimConfig::new(50.0, 7);
        let a = simulate(&params, &tau, spec, &shape, cfg).unwrap();
        let b = simulate(&params, &tau, spec, &shape, cfg).unwrap();
        let c = simulate(&params, &tau, spec, &shape, cfg.with_stream(1)).unwrap();
        assert!(a == b);
        assert!(a != c);
        assert!(!a.is_empty());
    }

    #[test]
    fn respects_changepoints_and_truncation() {
        let kind = GraphKind::Directed { n: 2 };
        let shape = GraphShape::new(kind);
        let spec = ModelSpec::main_only(Memory::Poisson, TauStrategy::Zero);
        let params = Params::filled(&Layout::new(kind, spec), 0.5_f64);
        let mut tau = TauMatrix::uniform(kind, f64::INFINITY);
        tau.set(0, 1, 20.0);
        tau.set(1, 1, 5.0);
        let log = simulate(&params, &tau, spec, &shape, SimConfig::new(40.0, 3)).unwrap();
        for e in log.events() {
            assert!(e.time >= tau.get(e.src, e.dst), "{e:?}");
        }
        let err = simulate(&params, &tau, spec, &shape, SimConfig::new(40.0, 3).with_max_events(2)).unwrap_err();
        assert!(matches!(err, MegError::SimulationTruncated { partial, .. } if partial.len() == 2));
    }

    #[test]
    fn exact_count() {
        let shape = GraphShape::bipartite(2, 3);
        let spec = ModelSpec::interaction_only(Memory::Markov, 2, TauStrategy::Zero);
        let params = Params::filled(&Layout::new(shape.kind, spec), 0.3_f64);
        let tau = TauMatrix::uniform(shape.kind, 0.0);
        let log = simulate_events(&params, &tau, spec, &shape, SimConfig::new(1.0, 1), 250).unwrap();
        assert_eq!(log.len(), 250);
        assert_eq!(log.horizon(), log.events()[249].time);
    }
}
