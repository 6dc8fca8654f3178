//! Intensities, compensators and the log-likelihood.
//!
//! Every node excitation is shared by all edges incident to the node, so the
//! node tracks are built once per evaluation and each active edge only pays
//! for its own events, its interaction tracks and a few binary searches.

use crate::error::{MegError, Result};
use crate::events::{EdgeEvents, EventIndex, GraphKind};
use crate::model::{Memory, ModelSpec};
use crate::params::{Block, Layout, Params};
use crate::scalar::{c, CompensatedSum, Real};
use crate::tau::TauMatrix;
use crate::track::Track;

/// Precomputed node tracks for one parameter vector and one event index.
#[derive(Debug)]
pub struct Evaluator<'a, S: Real> {
    params: &'a Params<S>,
    index: &'a EventIndex,
    spec: ModelSpec,
    layout: Layout,
    offsets: [usize; 12],
    src_tracks: Vec<Option<Track<'a, S>>>,
    dst_tracks: Vec<Option<Track<'a, S>>>,
}

impl<'a, S: Real> Evaluator<'a, S> {
    pub fn new(params: &'a Params<S>, index: &'a EventIndex, spec: ModelSpec) -> Result<Self> {
        Self::build(params, index, spec, None)
    }

    /// Only builds the tracks needed by edge `(src, dst)`.
    pub fn for_edge(
        params: &'a Params<S>,
        index: &'a EventIndex,
        spec: ModelSpec,
        src: usize,
        dst: usize,
    ) -> Result<Self> {
        if src >= index.n_src() || dst >= index.n_dst() {
            return Err(MegError::InvalidConfig(format!(
                "edge ({src}, {dst}) outside a {}x{} graph",
                index.n_src(),
                index.n_dst()
            )));
        }
        Self::build(params, index, spec, Some((src, dst)))
    }

    fn build(
        params: &'a Params<S>,
        index: &'a EventIndex,
        spec: ModelSpec,
        only: Option<(usize, usize)>,
    ) -> Result<Self> {
        spec.validate()?;
        let kind = GraphKind::Bipartite {
            n_src: index.n_src(),
            n_dst: index.n_dst(),
        };
        let layout = Layout::new(kind, spec);
        params.validate(&layout)?;
        let dt = index.dt();
        let mut src_tracks = Vec::with_capacity(index.n_src());
        let mut dst_tracks = Vec::with_capacity(index.n_dst());
        let memory = spec.main.filter(|m| m.is_self_exciting());
        for i in 0..index.n_src() {
            let wanted = only.is_none_or(|(s, _)| s == i);
            src_tracks.push(match memory {
                Some(m) if wanted => Some(Track::build(index.src_times(i), dt, params.src_decay(i), m)),
                _ => None,
            });
        }
        for j in 0..index.n_dst() {
            let wanted = only.is_none_or(|(_, d)| d == j);
            dst_tracks.push(match memory {
                Some(m) if wanted => Some(Track::build(index.dst_times(j), dt, params.dst_decay(j), m)),
                _ => None,
            });
        }
        let offsets = Block::ALL.map(|b| layout.offset(b));
        Ok(Self {
            params,
            index,
            spec,
            layout,
            offsets,
            src_tracks,
            dst_tracks,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &Params<S> {
        self.params
    }

    pub fn index(&self) -> &EventIndex {
        self.index
    }

    pub fn spec(&self) -> ModelSpec {
        self.spec
    }

    /// Per-edge view; builds the edge's interaction tracks.
    pub fn edge(&self, src: usize, dst: usize, tau: f64) -> EdgeModel<'_, 'a, S> {
        let events = self.index.edge(src, dst);
        let mut interaction = Vec::new();
        if let (Some(memory), Some(events)) = (self.spec.interaction.filter(|m| m.is_self_exciting()), events) {
            for q in 0..self.spec.dim {
                let kappa = self.params.interaction_decay(src, dst, q);
                interaction.push(Track::build(&events.times, self.index.dt(), kappa, memory));
            }
        }
        EdgeModel {
            ev: self,
            src,
            dst,
            tau,
            events,
            interaction,
            base: self.params.baseline(src, dst),
        }
    }

    fn src_track(&self, i: usize) -> Option<&Track<'a, S>> {
        self.src_tracks.get(i).and_then(Option::as_ref)
    }

    fn dst_track(&self, j: usize) -> Option<&Track<'a, S>> {
        self.dst_tracks.get(j).and_then(Option::as_ref)
    }

    /// Log-likelihood over `[0, horizon]`, adding `d/dparams` into `grad` when given.
    pub fn log_likelihood(&self, tau: &TauMatrix, horizon: f64, mut grad: Option<&mut [S]>) -> Result<S> {
        check_horizon(self.index, horizon)?;
        if let Some(g) = grad.as_deref() {
            if g.len() != self.layout.len() {
                return Err(MegError::InvalidParams(format!(
                    "gradient buffer has {} entries, layout needs {}",
                    g.len(),
                    self.layout.len()
                )));
            }
        }
        check_tau_shape(tau, self.index)?;
        let mut total = CompensatedSum::new();
        let mut failure = None;
        tau.for_each_active(horizon, |i, j, t| {
            if failure.is_some() {
                return;
            }
            match self.edge(i, j, t).log_likelihood(horizon, grad.as_deref_mut()) {
                Ok(v) => total.add(v),
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        // Edges with events but tau >= horizon are inactive and contribute nothing.
        Ok(total.value())
    }
}

fn check_horizon(index: &EventIndex, horizon: f64) -> Result<()> {
    let last = (0..index.n_src())
        .filter_map(|i| index.src_times(i).last().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    if !(horizon.is_finite() && horizon >= last && horizon >= 0.0) {
        return Err(MegError::InvalidConfig(format!(
            "horizon {horizon} precedes the last event at {last}"
        )));
    }
    Ok(())
}

fn check_tau_shape(tau: &TauMatrix, index: &EventIndex) -> Result<()> {
    let kind = tau.kind();
    if kind.n_src() != index.n_src() || kind.n_dst() != index.n_dst() {
        return Err(MegError::InvalidConfig(format!(
            "changepoint matrix is {}x{} but the graph is {}x{}",
            kind.n_src(),
            kind.n_dst(),
            index.n_src(),
            index.n_dst()
        )));
    }
    Ok(())
}

/// One edge of an [`Evaluator`].
#[derive(Debug)]
pub struct EdgeModel<'e, 'a, S: Real> {
    ev: &'e Evaluator<'a, S>,
    src: usize,
    dst: usize,
    tau: f64,
    events: Option<&'a EdgeEvents>,
    interaction: Vec<Track<'a, S>>,
    base: S,
}

/// Excitation components at one time: node source, node destination and
/// one entry per interaction dimension, each with its decay derivative.
#[derive(Debug, Clone, Default)]
pub(crate) struct Excitation<S> {
    pub(crate) src: (S, S),
    pub(crate) dst: (S, S),
    pub(crate) interaction: Vec<(S, S)>,
}

impl<'e, 'a, S: Real> EdgeModel<'e, 'a, S> {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn times(&self) -> &'a [f64] {
        self.events.map_or(&[], |e| e.times.as_slice())
    }

    fn jump_src(&self) -> S {
        self.ev.params.mu.get(self.src).copied().unwrap_or_else(S::zero)
    }

    fn jump_dst(&self) -> S {
        self.ev.params.mu_dst.get(self.dst).copied().unwrap_or_else(S::zero)
    }

    pub(crate) fn combine(&self, x: &Excitation<S>) -> S {
        let p = self.ev.params;
        let mut lambda = self.base + self.jump_src() * x.src.0 + self.jump_dst() * x.dst.0;
        for (q, &(e, _)) in x.interaction.iter().enumerate() {
            lambda = lambda + p.interaction_jump(self.src, self.dst, q) * e;
        }
        lambda
    }

    /// Excitation at an arbitrary time.
    fn excitation_at(&self, t: f64) -> Excitation<S> {
        let zero = (S::zero(), S::zero());
        Excitation {
            src: self.ev.src_track(self.src).map_or(zero, |tr| tr.at(t)),
            dst: self.ev.dst_track(self.dst).map_or(zero, |tr| tr.at(t)),
            interaction: self.interaction.iter().map(|tr| tr.at(t)).collect(),
        }
    }

    /// Excitation at the `k`-th edge event, from the precomputed node values.
    pub(crate) fn excitation_at_event(&self, k: usize) -> Excitation<S> {
        let zero = (S::zero(), S::zero());
        let events = self.events.expect("edge has events");
        Excitation {
            src: self
                .ev
                .src_track(self.src)
                .map_or(zero, |tr| tr.at_event(events.src_pos[k])),
            dst: self
                .ev
                .dst_track(self.dst)
                .map_or(zero, |tr| tr.at_event(events.dst_pos[k])),
            interaction: self.interaction.iter().map(|tr| tr.at_event(k)).collect(),
        }
    }

    /// Integrated excitation over `[from, to]`.
    fn integrated(&self, from: f64, to: f64) -> Excitation<S> {
        let zero = (S::zero(), S::zero());
        Excitation {
            src: self.ev.src_track(self.src).map_or(zero, |tr| tr.integral(from, to)),
            dst: self.ev.dst_track(self.dst).map_or(zero, |tr| tr.integral(from, to)),
            interaction: self.interaction.iter().map(|tr| tr.integral(from, to)).collect(),
        }
    }

    /// Conditional intensity at `t` (left limit: events at `t` do not count).
    pub fn intensity(&self, t: f64) -> Result<S> {
        if !(t >= self.tau) {
            return Err(MegError::UndefinedIntensity {
                src: self.src,
                dst: self.dst,
                time: t,
                tau: self.tau,
            });
        }
        Ok(self.combine(&self.excitation_at(t)))
    }

    /// Integrated intensity over `[tau, t]`; zero before the changepoint.
    pub fn compensator(&self, t: f64) -> S {
        self.compensator_between(self.tau, t)
    }

    /// Integrated intensity over `[from, to]` clipped to `[tau, inf)`.
    pub fn compensator_between(&self, from: f64, to: f64) -> S {
        let from = from.max(self.tau);
        if !(to > from) {
            return S::zero();
        }
        let x = self.integrated(from, to);
        self.base * c(to - from) + self.combine_without_base(&x)
    }

    fn combine_without_base(&self, x: &Excitation<S>) -> S {
        self.combine(x) - self.base
    }

    /// This edge's contribution to the log-likelihood over `[tau, horizon]`.
    pub fn log_likelihood(&self, horizon: f64, grad: Option<&mut [S]>) -> Result<S> {
        if !(self.tau < horizon) {
            return Ok(S::zero());
        }
        let times = self.times();
        let failure = |what| MegError::NumericFailure {
            src: self.src,
            dst: self.dst,
            what,
        };
        let mut logs = CompensatedSum::new();
        let mut grad = grad.map(|g| GradSink::new(self, g));
        for (k, &t) in times.iter().enumerate() {
            if t < self.tau {
                return Err(MegError::UndefinedIntensity {
                    src: self.src,
                    dst: self.dst,
                    time: t,
                    tau: self.tau,
                });
            }
            let x = self.excitation_at_event(k);
            let lambda = self.combine(&x);
            if !(lambda.is_finite() && lambda > S::zero()) {
                return Err(failure("intensity at an event is not a finite positive number"));
            }
            logs.add(lambda.ln());
            if let Some(g) = grad.as_mut() {
                let w = lambda.recip();
                g.add(&x, w, w);
            }
        }
        let x = self.integrated(self.tau, horizon);
        let span: S = c(horizon - self.tau);
        let comp = self.base * span + self.combine_without_base(&x);
        if let Some(g) = grad.as_mut() {
            g.add(&x, -S::one(), -span);
        }
        let value = logs.value() - comp;
        if !value.is_finite() {
            return Err(failure("log-likelihood is not finite"));
        }
        Ok(value)
    }
}

/// Writes one edge's derivative terms into the flat gradient buffer.
struct GradSink<'g, 'm, 'e, 'a, S: Real> {
    edge: &'m EdgeModel<'e, 'a, S>,
    out: &'g mut [S],
}

impl<'g, 'm, 'e, 'a, S: Real> GradSink<'g, 'm, 'e, 'a, S> {
    fn new(edge: &'m EdgeModel<'e, 'a, S>, out: &'g mut [S]) -> Self {
        Self { edge, out }
    }

    /// Adds `weight * d(excitation terms) + base_weight * d(baseline)`.
    fn add(&mut self, x: &Excitation<S>, weight: S, base_weight: S) {
        let e = self.edge;
        let p = e.ev.params;
        let off = |b: Block| e.ev.offsets[b as usize];
        let (i, j) = (e.src, e.dst);
        let spec = e.ev.spec;
        if spec.main.is_some() {
            self.bump(off(Block::Alpha) + i, base_weight);
            self.bump(off(Block::Beta) + j, base_weight);
        }
        if spec.main_excites() {
            let (mu, (v, vk)) = (p.mu[i], x.src);
            self.bump(off(Block::Mu) + i, weight * (v + mu * vk));
            self.bump(off(Block::Phi) + i, weight * mu * vk);
            let (mu, (v, vk)) = (p.mu_dst[j], x.dst);
            self.bump(off(Block::MuDst) + j, weight * (v + mu * vk));
            self.bump(off(Block::PhiDst) + j, weight * mu * vk);
        }
        if spec.interaction.is_some() {
            let d = spec.dim;
            for q in 0..d {
                self.bump(off(Block::Gamma) + i * d + q, base_weight * p.gamma_dst[[j, q]]);
                self.bump(off(Block::GammaDst) + j * d + q, base_weight * p.gamma[[i, q]]);
            }
        }
        if spec.interaction_excites() {
            let d = spec.dim;
            for (q, &(v, vk)) in x.interaction.iter().enumerate() {
                let (nu, nu_d) = (p.nu[[i, q]], p.nu_dst[[j, q]]);
                let src_rate = nu + p.theta[[i, q]];
                let dst_rate = nu_d + p.theta_dst[[j, q]];
                let jump = nu * nu_d;
                let via_src = weight * jump * vk * dst_rate;
                let via_dst = weight * jump * vk * src_rate;
                self.bump(off(Block::Nu) + i * d + q, weight * nu_d * v + via_src);
                self.bump(off(Block::Theta) + i * d + q, via_src);
                self.bump(off(Block::NuDst) + j * d + q, weight * nu * v + via_dst);
                self.bump(off(Block::ThetaDst) + j * d + q, via_dst);
            }
        }
    }

    #[inline]
    fn bump(&mut self, at: usize, v: S) {
        self.out[at] = self.out[at] + v;
    }
}

/// Per-event excitation values and compensator on one edge.
#[derive(Debug, Clone)]
pub struct RecursionState<S> {
    src: usize,
    dst: usize,
    tau: f64,
    times: Vec<f64>,
    psi_src: Vec<S>,
    psi_dst: Vec<S>,
    psi_interaction: Vec<Vec<S>>,
    cumulative: Vec<S>,
}

impl<S: Real> RecursionState<S> {
    pub fn new(
        params: &Params<S>,
        index: &EventIndex,
        tau: &TauMatrix,
        spec: ModelSpec,
        edge: (usize, usize),
    ) -> Result<Self> {
        let (i, j) = edge;
        let ev = Evaluator::for_edge(params, index, spec, i, j)?;
        let model = ev.edge(i, j, tau.get(i, j));
        let times = model.times().to_vec();
        let mut psi_src = Vec::with_capacity(times.len());
        let mut psi_dst = Vec::with_capacity(times.len());
        let mut psi_interaction = vec![Vec::with_capacity(times.len()); model.interaction.len()];
        let mut cumulative = Vec::with_capacity(times.len());
        for (k, &t) in times.iter().enumerate() {
            let x = model.excitation_at_event(k);
            psi_src.push(x.src.0);
            psi_dst.push(x.dst.0);
            for (q, &(v, _)) in x.interaction.iter().enumerate() {
                psi_interaction[q].push(v);
            }
            cumulative.push(model.compensator(t));
        }
        Ok(Self {
            src: i,
            dst: j,
            tau: model.tau,
            times,
            psi_src,
            psi_dst,
            psi_interaction,
            cumulative,
        })
    }

    pub fn edge(&self) -> (usize, usize) {
        (self.src, self.dst)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn check(&self, k: usize) -> Result<()> {
        if k >= self.times.len() {
            return Err(MegError::EventOutOfRange { k, n: self.times.len() });
        }
        Ok(())
    }

    /// Source-node excitation (without the jump size) at the `k`-th edge event.
    pub fn psi_src(&self, k: usize) -> Result<S> {
        self.check(k)?;
        Ok(self.psi_src[k])
    }

    /// Destination-node excitation at the `k`-th edge event.
    pub fn psi_dst(&self, k: usize) -> Result<S> {
        self.check(k)?;
        Ok(self.psi_dst[k])
    }

    /// Interaction excitation in dimension `q` at the `k`-th edge event.
    pub fn psi_interaction(&self, k: usize, q: usize) -> Result<S> {
        self.check(k)?;
        Ok(self.psi_interaction.get(q).map_or(S::zero(), |v| v[k]))
    }

    /// Compensator at the `k`-th edge event.
    pub fn compensator_at(&self, k: usize) -> Result<S> {
        self.check(k)?;
        Ok(self.cumulative[k])
    }
}

/// `Lambda(t_k) - Lambda(t_{k-1})` on the state's edge (from `tau` when `k = 0`).
pub fn compensator_increment<S: Real>(state: &RecursionState<S>, k: usize) -> Result<S> {
    let now = state.compensator_at(k)?;
    Ok(if k == 0 { now } else { now - state.cumulative[k - 1] })
}

/// Conditional intensity of edge `(i, j)` at `t`.
pub fn intensity<S: Real>(
    params: &Params<S>,
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    edge: (usize, usize),
    t: f64,
) -> Result<S> {
    let ev = Evaluator::for_edge(params, index, spec, edge.0, edge.1)?;
    ev.edge(edge.0, edge.1, tau.get(edge.0, edge.1)).intensity(t)
}

/// Integrated intensity of edge `(i, j)` over `[tau_ij, t]`.
pub fn compensator<S: Real>(
    params: &Params<S>,
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    edge: (usize, usize),
    t: f64,
) -> Result<S> {
    let ev = Evaluator::for_edge(params, index, spec, edge.0, edge.1)?;
    Ok(ev.edge(edge.0, edge.1, tau.get(edge.0, edge.1)).compensator(t))
}

/// Log-likelihood of the indexed events over `[0, horizon]`.
pub fn log_likelihood<S: Real>(
    params: &Params<S>,
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    horizon: f64,
) -> Result<S> {
    Evaluator::new(params, index, spec)?.log_likelihood(tau, horizon, None)
}

/// Log-likelihood and its gradient with respect to the parameters (flat layout).
pub fn log_likelihood_with_gradient<S: Real>(
    params: &Params<S>,
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    horizon: f64,
) -> Result<(S, Vec<S>)> {
    let ev = Evaluator::new(params, index, spec)?;
    let mut grad = vec![S::zero(); ev.layout().len()];
    let value = ev.log_likelihood(tau, horizon, Some(&mut grad))?;
    Ok((value, grad))
}

/// Largest jump the Markov model can produce on edge `(i, j)`.
pub fn markov_bound<S: Real>(params: &Params<S>, spec: ModelSpec, i: usize, j: usize) -> S {
    let mut bound = params.baseline(i, j);
    if spec.main == Some(Memory::Markov) {
        bound = bound + params.mu[i] + params.mu_dst[j];
    }
    if spec.interaction == Some(Memory::Markov) {
        for q in 0..spec.dim {
            bound = bound + params.interaction_jump(i, j, q);
        }
    }
    bound
}
