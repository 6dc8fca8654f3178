//! EM on the branching-structure reparametrisation (Hawkes components only).
//!
//! Each event is attributed either to a baseline component or to an earlier
//! event through an excitation kernel. With jump sizes written as
//! `ratio * decay`, every kernel is a normalised exponential density times a
//! branching ratio in `(0, 1)`, which makes the complete-data likelihood
//! separate into small blocks. The E-step only needs aggregated attribution
//! mass and attributed delays, which come out of the same linear-time pass
//! as the likelihood.

use ndarray::Array2;

use crate::adam::FitReport;
use crate::error::{MegError, Result};
use crate::events::{excites, EventIndex, GraphShape};
use crate::likelihood::Evaluator;
use crate::model::{Memory, ModelSpec};
use crate::params::{Layout, Params};
use crate::scalar::{c, Real};
use crate::tau::TauMatrix;

/// Parameters with excitation written as (branching ratio, decay rate).
#[derive(Debug, Clone, PartialEq)]
pub struct TildeParams<S> {
    pub alpha: Vec<S>,
    pub beta: Vec<S>,
    /// `mu / (mu + phi)`.
    pub mu_ratio: Vec<S>,
    /// `mu + phi`.
    pub mu_decay: Vec<S>,
    pub mu_ratio_dst: Vec<S>,
    pub mu_decay_dst: Vec<S>,
    pub gamma: Array2<S>,
    pub gamma_dst: Array2<S>,
    /// `nu / (nu + theta)`.
    pub nu_ratio: Array2<S>,
    /// `nu + theta`.
    pub nu_decay: Array2<S>,
    pub nu_ratio_dst: Array2<S>,
    pub nu_decay_dst: Array2<S>,
}

fn ratio_cap<S: Real>() -> S {
    S::one() - c::<S>(1e-9).max(S::epsilon() * c(4.0))
}

impl<S: Real> TildeParams<S> {
    pub fn from_params(p: &Params<S>) -> Self {
        let cap = ratio_cap::<S>();
        let ratio = |jump: S, offset: S| (jump / (jump + offset)).min(cap);
        let zip_v =
            |a: &[S], b: &[S], f: &dyn Fn(S, S) -> S| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect::<Vec<S>>();
        let zip_m = |a: &Array2<S>, b: &Array2<S>, f: &dyn Fn(S, S) -> S| {
            let mut out = a.clone();
            out.zip_mut_with(b, |x, &y| *x = f(*x, y));
            out
        };
        Self {
            alpha: p.alpha.clone(),
            beta: p.beta.clone(),
            mu_ratio: zip_v(&p.mu, &p.phi, &ratio),
            mu_decay: zip_v(&p.mu, &p.phi, &|a, b| a + b),
            mu_ratio_dst: zip_v(&p.mu_dst, &p.phi_dst, &ratio),
            mu_decay_dst: zip_v(&p.mu_dst, &p.phi_dst, &|a, b| a + b),
            gamma: p.gamma.clone(),
            gamma_dst: p.gamma_dst.clone(),
            nu_ratio: zip_m(&p.nu, &p.theta, &ratio),
            nu_decay: zip_m(&p.nu, &p.theta, &|a, b| a + b),
            nu_ratio_dst: zip_m(&p.nu_dst, &p.theta_dst, &ratio),
            nu_decay_dst: zip_m(&p.nu_dst, &p.theta_dst, &|a, b| a + b),
        }
    }

    pub fn to_params(&self) -> Params<S> {
        let jump = |r: &[S], d: &[S]| r.iter().zip(d).map(|(&r, &d)| r * d).collect::<Vec<S>>();
        let rest = |r: &[S], d: &[S]| r.iter().zip(d).map(|(&r, &d)| d * (S::one() - r)).collect::<Vec<S>>();
        let jump_m = |r: &Array2<S>, d: &Array2<S>| {
            let mut out = r.clone();
            out.zip_mut_with(d, |r, &d| *r = *r * d);
            out
        };
        let rest_m = |r: &Array2<S>, d: &Array2<S>| {
            let mut out = r.clone();
            out.zip_mut_with(d, |r, &d| *r = d * (S::one() - *r));
            out
        };
        Params {
            alpha: self.alpha.clone(),
            mu: jump(&self.mu_ratio, &self.mu_decay),
            phi: rest(&self.mu_ratio, &self.mu_decay),
            beta: self.beta.clone(),
            mu_dst: jump(&self.mu_ratio_dst, &self.mu_decay_dst),
            phi_dst: rest(&self.mu_ratio_dst, &self.mu_decay_dst),
            gamma: self.gamma.clone(),
            nu: jump_m(&self.nu_ratio, &self.nu_decay),
            theta: rest_m(&self.nu_ratio, &self.nu_decay),
            gamma_dst: self.gamma_dst.clone(),
            nu_dst: jump_m(&self.nu_ratio_dst, &self.nu_decay_dst),
            theta_dst: rest_m(&self.nu_ratio_dst, &self.nu_decay_dst),
        }
    }
}

/// Attribution statistics of one edge's interaction excitation.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAttribution<S> {
    pub src: usize,
    pub dst: usize,
    /// Per dimension: expected number of events caused by earlier edge events.
    pub mass: Vec<S>,
    /// Per dimension: expected total parent-to-child delay.
    pub delay: Vec<S>,
}

/// Expected branching structure, aggregated to what the M-step consumes.
///
/// Per-event attributions are streamed and summed, never stored; use
/// [`event_responsibilities`] to inspect a single event.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities<S> {
    /// Expected baseline counts per source / destination node.
    pub alpha: Vec<S>,
    pub beta: Vec<S>,
    pub gamma: Array2<S>,
    pub gamma_dst: Array2<S>,
    /// Expected counts caused by the node's own earlier events, and delays.
    pub src_mass: Vec<S>,
    pub src_delay: Vec<S>,
    pub dst_mass: Vec<S>,
    pub dst_delay: Vec<S>,
    pub edges: Vec<EdgeAttribution<S>>,
    /// Events on active edges.
    pub events: usize,
    /// Log-likelihood at the parameters used for the attribution.
    pub log_likelihood: S,
}

impl<S: Real> Responsibilities<S> {
    /// Sum of all attribution mass; equals `events` up to rounding.
    pub fn total_mass(&self) -> S {
        let sum = |v: &[S]| v.iter().copied().fold(S::zero(), |a, b| a + b);
        let mut total =
            sum(&self.alpha) + sum(&self.beta) + self.gamma.sum() + sum(&self.src_mass) + sum(&self.dst_mass);
        for e in &self.edges {
            total = total + sum(&e.mass);
        }
        total
    }
}

fn require_hawkes(spec: ModelSpec) -> Result<()> {
    let ok = |m: Option<Memory>| m.is_none_or(|m| m == Memory::Hawkes);
    if ok(spec.main) && ok(spec.interaction) {
        spec.validate()
    } else {
        Err(MegError::Unsupported(format!(
            "EM needs Hawkes memory for every present component (main: {}, interaction: {}); use Adam instead",
            crate::model::component_name(spec.main),
            crate::model::component_name(spec.interaction)
        )))
    }
}

/// Attribution statistics at `tilde`.
pub fn e_step<S: Real>(
    tilde: &TildeParams<S>,
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
) -> Result<Responsibilities<S>> {
    require_hawkes(spec)?;
    let params = tilde.to_params();
    e_step_params(&params, index, tau, spec)
}

fn e_step_params<S: Real>(
    params: &Params<S>,
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
) -> Result<Responsibilities<S>> {
    let ev = Evaluator::new(params, index, spec)?;
    let horizon = index.horizon();
    let log_likelihood = ev.log_likelihood(tau, horizon, None)?;
    let (n_src, n_dst, d) = (index.n_src(), index.n_dst(), spec.dim);
    let main = spec.main.is_some();
    let inter = spec.interaction.is_some();
    let zeros = |n: usize, on: bool| vec![S::zero(); if on { n } else { 0 }];
    let zeros_m = |n: usize| Array2::zeros((if inter { n } else { 0 }, d));
    let mut r = Responsibilities {
        alpha: zeros(n_src, main),
        beta: zeros(n_dst, main),
        gamma: zeros_m(n_src),
        gamma_dst: zeros_m(n_dst),
        src_mass: zeros(n_src, main),
        src_delay: zeros(n_src, main),
        dst_mass: zeros(n_dst, main),
        dst_delay: zeros(n_dst, main),
        edges: Vec::new(),
        events: 0,
        log_likelihood,
    };
    for (i, j, t) in tau.active_edges(horizon) {
        let edge = ev.edge(i, j, t);
        let n = edge.times().len();
        if n == 0 {
            continue;
        }
        r.events += n;
        let mut attribution = EdgeAttribution {
            src: i,
            dst: j,
            mass: vec![S::zero(); if inter { d } else { 0 }],
            delay: vec![S::zero(); if inter { d } else { 0 }],
        };
        for k in 0..n {
            let x = edge.excitation_at_event(k);
            let w = edge.combine(&x).recip();
            if main {
                r.alpha[i] = r.alpha[i] + params.alpha[i] * w;
                r.beta[j] = r.beta[j] + params.beta[j] * w;
                let (mu, mu_d) = (params.mu[i], params.mu_dst[j]);
                r.src_mass[i] = r.src_mass[i] + mu * x.src.0 * w;
                r.src_delay[i] = r.src_delay[i] - mu * x.src.1 * w;
                r.dst_mass[j] = r.dst_mass[j] + mu_d * x.dst.0 * w;
                r.dst_delay[j] = r.dst_delay[j] - mu_d * x.dst.1 * w;
            }
            if inter {
                for q in 0..d {
                    let share = params.gamma[[i, q]] * params.gamma_dst[[j, q]] * w;
                    r.gamma[[i, q]] = r.gamma[[i, q]] + share;
                    r.gamma_dst[[j, q]] = r.gamma_dst[[j, q]] + share;
                    let jump = params.interaction_jump(i, j, q) * w;
                    let (v, vk) = x.interaction[q];
                    attribution.mass[q] = attribution.mass[q] + jump * v;
                    attribution.delay[q] = attribution.delay[q] - jump * vk;
                }
            }
        }
        if inter {
            r.edges.push(attribution);
        }
    }
    Ok(r)
}

/// Attribution of a single event: baseline shares and one probability per
/// admissible parent event, computed directly from the kernel definitions.
#[derive(Debug, Clone, PartialEq)]
pub struct EventResponsibility<S> {
    pub time: f64,
    pub alpha: S,
    pub beta: S,
    pub gamma: Vec<S>,
    /// `(parent time, probability)` through the source node's excitation.
    pub src_parents: Vec<(f64, S)>,
    pub dst_parents: Vec<(f64, S)>,
    /// Per dimension, parents among the edge's own events.
    pub edge_parents: Vec<Vec<(f64, S)>>,
}

impl<S: Real> EventResponsibility<S> {
    pub fn total(&self) -> S {
        let parents = |v: &[(f64, S)]| v.iter().fold(S::zero(), |a, &(_, p)| a + p);
        let mut total = self.alpha + self.beta + self.gamma.iter().copied().fold(S::zero(), |a, b| a + b);
        total = total + parents(&self.src_parents) + parents(&self.dst_parents);
        for v in &self.edge_parents {
            total = total + parents(v);
        }
        total
    }
}

/// Attribution of the `k`-th event on edge `(i, j)`.
pub fn event_responsibilities<S: Real>(
    tilde: &TildeParams<S>,
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    edge: (usize, usize),
    k: usize,
) -> Result<EventResponsibility<S>> {
    require_hawkes(spec)?;
    let (i, j) = edge;
    let params = tilde.to_params();
    let events = index.edge(i, j).ok_or(MegError::EventOutOfRange { k, n: 0 })?;
    let t = *events
        .times
        .get(k)
        .ok_or(MegError::EventOutOfRange { k, n: events.len() })?;
    let lambda: S = crate::likelihood::intensity(&params, index, tau, spec, edge, t)?;
    let dt = index.dt();
    let kernel = |times: &[f64], jump: S, rate: S| -> Vec<(f64, S)> {
        times
            .iter()
            .filter(|&&s| excites(s, t, dt))
            .map(|&s| (s, jump * (-rate * c(t - s)).exp() / lambda))
            .collect()
    };
    let main = spec.main.is_some();
    let mut out = EventResponsibility {
        time: t,
        alpha: if main { params.alpha[i] / lambda } else { S::zero() },
        beta: if main { params.beta[j] / lambda } else { S::zero() },
        gamma: Vec::new(),
        src_parents: Vec::new(),
        dst_parents: Vec::new(),
        edge_parents: Vec::new(),
    };
    if main {
        out.src_parents = kernel(index.src_times(i), params.mu[i], params.src_decay(i));
        out.dst_parents = kernel(index.dst_times(j), params.mu_dst[j], params.dst_decay(j));
    }
    if spec.interaction.is_some() {
        for q in 0..spec.dim {
            out.gamma.push(params.gamma[[i, q]] * params.gamma_dst[[j, q]] / lambda);
            out.edge_parents.push(kernel(
                &events.times,
                params.interaction_jump(i, j, q),
                params.interaction_decay(i, j, q),
            ));
        }
    }
    Ok(out)
}

/// Compensator window of one parent event: the kernel is integrated from
/// `lag` to `end` after the parent, `weight` times.
#[derive(Debug, Clone, Copy)]
struct Window<S> {
    lag: S,
    end: S,
    weight: S,
}

/// Windows of one node's events over all of its active edges. Edges already
/// active when an event starts exciting share a single weighted window.
fn node_windows<S: Real>(times: &[f64], taus: &mut [f64], dt: f64, horizon: f64) -> Vec<Window<S>> {
    taus.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    for &s in times {
        let start = s + dt;
        if start >= horizon {
            continue;
        }
        let shared = taus.partition_point(|&t| t <= start);
        if shared > 0 {
            out.push(Window {
                lag: c(dt),
                end: c(horizon - s),
                weight: S::from_usize_lossy(shared),
            });
        }
        for &t in &taus[shared..] {
            out.push(Window {
                lag: c(t - s),
                end: c(horizon - s),
                weight: S::one(),
            });
        }
    }
    out
}

fn edge_windows<S: Real>(times: &[f64], tau: f64, dt: f64, horizon: f64) -> Vec<Window<S>> {
    times
        .iter()
        .filter_map(|&s| {
            let lag = dt.max(tau - s);
            (s + lag < horizon).then(|| Window {
                lag: c(lag),
                end: c(horizon - s),
                weight: S::one(),
            })
        })
        .collect()
}

struct Group<'w, S> {
    /// Factor multiplying the block's ratio in the compensator.
    weight: S,
    /// Factor multiplying the block's rate inside the kernel.
    scale: S,
    windows: &'w [Window<S>],
}

/// One (ratio, rate) block of the expected complete-data log-likelihood:
/// `mass * ln(ratio * rate) - rate * linear - ratio * sum_g weight_g * F_g(rate * scale_g)`
/// with `F(k) = sum_w weight_w (exp(-k lag_w) - exp(-k end_w))`.
struct RateBlock<'w, S> {
    mass: S,
    linear: S,
    groups: Vec<Group<'w, S>>,
}

const INNER_ITERATIONS: usize = 100;
const INNER_TOLERANCE: f64 = 1e-10;

impl<S: Real> RateBlock<'_, S> {
    /// `sum weight * F(rate * scale)` and `sum weight * scale * F'(rate * scale)`.
    fn coverage(&self, rate: S) -> (S, S) {
        let (mut value, mut slope) = (S::zero(), S::zero());
        for g in &self.groups {
            let k = rate * g.scale;
            let (mut f, mut df) = (S::zero(), S::zero());
            for w in g.windows {
                let a = (-k * w.lag).exp();
                let b = (-k * w.end).exp();
                f = f + w.weight * (a - b);
                df = df + w.weight * (w.end * b - w.lag * a);
            }
            value = value + g.weight * f;
            slope = slope + g.weight * g.scale * df;
        }
        (value, slope)
    }

    fn objective(&self, ratio: S, rate: S) -> S {
        self.mass * (ratio * rate).ln() - rate * self.linear - ratio * self.coverage(rate).0
    }

    fn best_ratio(&self, rate: S) -> Option<S> {
        let cover = self.coverage(rate).0;
        (cover > S::zero() && cover.is_finite()).then(|| (self.mass / cover).min(ratio_cap()))
    }

    /// Closed-form ratio plus fixed-point rate, accepted only if the block
    /// objective does not decrease; otherwise only the ratio moves.
    fn update(&self, ratio: S, rate: S) -> (S, S) {
        if !(self.mass > S::zero()) {
            return (ratio, rate);
        }
        let Some(start_ratio) = self.best_ratio(rate) else {
            return (ratio, rate);
        };
        let start = self.objective(start_ratio, rate);
        let mut r = rate;
        let mut damping = S::one();
        let mut previous = S::zero();
        for _ in 0..INNER_ITERATIONS {
            let Some(rho) = self.best_ratio(r) else { break };
            let denom = self.linear + rho * self.coverage(r).1;
            if !(denom > S::zero() && denom.is_finite()) {
                break;
            }
            let step = self.mass / denom - r;
            if step * previous < S::zero() {
                damping = damping * c(0.5);
            }
            previous = step;
            let mut next = r + damping * step;
            if !(next > S::zero()) {
                next = r * c(0.5);
            }
            let change = ((next - r) / r).abs();
            r = next;
            if change < c(INNER_TOLERANCE) {
                break;
            }
        }
        match self.best_ratio(r) {
            Some(rho) if self.objective(rho, r) >= start => (rho, r),
            _ => (start_ratio, rate),
        }
    }
}

/// Maximises the expected complete-data log-likelihood block by block.
pub fn m_step<S: Real>(
    resp: &Responsibilities<S>,
    tilde: &TildeParams<S>,
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    horizon: f64,
) -> Result<TildeParams<S>> {
    require_hawkes(spec)?;
    let mut next = tilde.clone();
    let active = tau.active_edges(horizon);
    let dt = index.dt();
    let (n_src, n_dst, d) = (index.n_src(), index.n_dst(), spec.dim);
    let held = std::cell::Cell::new(0usize);
    let hold = |mass: S, denom: S, old: S| {
        let v = mass / denom;
        if mass > S::zero() && v.is_finite() && v > S::zero() {
            v
        } else {
            held.set(held.get() + 1);
            old
        }
    };

    if spec.main.is_some() {
        let mut span_src = vec![S::zero(); n_src];
        let mut span_dst = vec![S::zero(); n_dst];
        let mut tau_src = vec![Vec::new(); n_src];
        let mut tau_dst = vec![Vec::new(); n_dst];
        for &(i, j, t) in &active {
            let span: S = c(horizon - t);
            span_src[i] = span_src[i] + span;
            span_dst[j] = span_dst[j] + span;
            tau_src[i].push(t);
            tau_dst[j].push(t);
        }
        for i in 0..n_src {
            next.alpha[i] = hold(resp.alpha[i], span_src[i], tilde.alpha[i]);
            let windows = node_windows::<S>(index.src_times(i), &mut tau_src[i], dt, horizon);
            let block = RateBlock {
                mass: resp.src_mass[i],
                linear: resp.src_delay[i],
                groups: vec![Group {
                    weight: S::one(),
                    scale: S::one(),
                    windows: &windows,
                }],
            };
            (next.mu_ratio[i], next.mu_decay[i]) = block.update(tilde.mu_ratio[i], tilde.mu_decay[i]);
        }
        for j in 0..n_dst {
            next.beta[j] = hold(resp.beta[j], span_dst[j], tilde.beta[j]);
            let windows = node_windows::<S>(index.dst_times(j), &mut tau_dst[j], dt, horizon);
            let block = RateBlock {
                mass: resp.dst_mass[j],
                linear: resp.dst_delay[j],
                groups: vec![Group {
                    weight: S::one(),
                    scale: S::one(),
                    windows: &windows,
                }],
            };
            (next.mu_ratio_dst[j], next.mu_decay_dst[j]) = block.update(tilde.mu_ratio_dst[j], tilde.mu_decay_dst[j]);
        }
    }

    if spec.interaction.is_some() {
        // Sources first, then destinations against the updated sources.
        for q in 0..d {
            let mut denom = vec![S::zero(); n_src];
            for &(i, j, t) in &active {
                denom[i] = denom[i] + next.gamma_dst[[j, q]] * c(horizon - t);
            }
            for (i, &den) in denom.iter().enumerate() {
                next.gamma[[i, q]] = hold(resp.gamma[[i, q]], den, tilde.gamma[[i, q]]);
            }
            let mut denom = vec![S::zero(); n_dst];
            for &(i, j, t) in &active {
                denom[j] = denom[j] + next.gamma[[i, q]] * c(horizon - t);
            }
            for (j, &den) in denom.iter().enumerate() {
                next.gamma_dst[[j, q]] = hold(resp.gamma_dst[[j, q]], den, tilde.gamma_dst[[j, q]]);
            }
        }
    }

    if spec.interaction_excites() {
        let windows: Vec<Vec<Window<S>>> = resp
            .edges
            .iter()
            .map(|e| {
                let times = index.edge(e.src, e.dst).map_or(&[][..], |ev| ev.times.as_slice());
                edge_windows(times, tau.get(e.src, e.dst), dt, horizon)
            })
            .collect();
        for q in 0..d {
            for i in 0..n_src {
                let mut block = RateBlock {
                    mass: S::zero(),
                    linear: S::zero(),
                    groups: Vec::new(),
                };
                for (e, w) in resp.edges.iter().zip(&windows).filter(|(e, _)| e.src == i) {
                    let scale = next.nu_decay_dst[[e.dst, q]];
                    block.mass = block.mass + e.mass[q];
                    block.linear = block.linear + scale * e.delay[q];
                    block.groups.push(Group {
                        weight: next.nu_ratio_dst[[e.dst, q]],
                        scale,
                        windows: w,
                    });
                }
                (next.nu_ratio[[i, q]], next.nu_decay[[i, q]]) =
                    block.update(next.nu_ratio[[i, q]], next.nu_decay[[i, q]]);
            }
            for j in 0..n_dst {
                let mut block = RateBlock {
                    mass: S::zero(),
                    linear: S::zero(),
                    groups: Vec::new(),
                };
                for (e, w) in resp.edges.iter().zip(&windows).filter(|(e, _)| e.dst == j) {
                    let scale = next.nu_decay[[e.src, q]];
                    block.mass = block.mass + e.mass[q];
                    block.linear = block.linear + scale * e.delay[q];
                    block.groups.push(Group {
                        weight: next.nu_ratio[[e.src, q]],
                        scale,
                        windows: w,
                    });
                }
                (next.nu_ratio_dst[[j, q]], next.nu_decay_dst[[j, q]]) =
                    block.update(next.nu_ratio_dst[[j, q]], next.nu_decay_dst[[j, q]]);
            }
        }
    }
    if held.get() > 0 {
        log::debug!(
            "{} baseline entries had no responsibility mass and kept their value",
            held.get()
        );
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop when the log-likelihood changes by less than this (absolute).
    pub tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 1e-6,
        }
    }
}

/// Alternates E- and M-steps from `init` until the log-likelihood settles.
pub fn em_fit<S: Real>(
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    shape: &GraphShape,
    init: &Params<S>,
    cfg: &EmConfig,
) -> Result<FitReport<S>> {
    require_hawkes(spec)?;
    if !(cfg.tol >= 0.0) {
        return Err(MegError::InvalidConfig(format!(
            "EM tolerance must be nonnegative, got {}",
            cfg.tol
        )));
    }
    init.validate(&Layout::new(shape.kind, spec))?;
    let horizon = index.horizon();
    let mut tilde = TildeParams::from_params(init);
    let mut params = tilde.to_params();
    let mut trace = Vec::new();
    let mut converged = false;
    loop {
        let resp = e_step_params(&params, index, tau, spec)?;
        let value = resp.log_likelihood;
        if let Some(&last) = trace.last() {
            let change: S = value - last;
            if change.abs() < c(cfg.tol) {
                trace.push(value);
                converged = true;
                break;
            }
        }
        trace.push(value);
        if trace.len() > cfg.max_iter {
            break;
        }
        tilde = m_step(&resp, &tilde, index, tau, spec, horizon)?;
        params = tilde.to_params();
    }
    Ok(FitReport {
        log_likelihood: *trace.last().expect("at least one evaluation"),
        iterations: trace.len() - 1,
        params,
        trace,
        converged,
        best_restart: 0,
        failed_restarts: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, EventLog, GraphKind};
    use crate::model::TauStrategy;

    fn instance() -> (EventIndex, GraphShape, TauMatrix) {
        let kind = GraphKind::Directed { n: 2 };
        let times = [0.3, 0.9, 1.0, 1.7, 2.4, 2.5, 3.1, 4.0, 4.4, 5.5];
        let events = times
            .iter()
            .enumerate()
            .map(|(k, &t)| Event::new(t, k % 2, (k / 2) % 2))
            .collect();
        let log = EventLog::new(events, 6.0, 0.0).unwrap();
        let index = EventIndex::build(&log, kind).unwrap();
        (index, GraphShape::new(kind), TauMatrix::uniform(kind, 0.0))
    }

    #[test]
    fn reparametrisation_round_trip() {
        let spec = ModelSpec::new(Some(Memory::Hawkes), Some(Memory::Hawkes), 2, TauStrategy::Zero).unwrap();
        let layout = Layout::new(GraphKind::Directed { n: 3 }, spec);
        let mut k = 0.0;
        let p = Params::<f64>::from_fn(&layout, |_, _, _| {
            k += 0.37;
            k
        });
        let back = TildeParams::from_params(&p).to_params();
        for (a, b) in p.to_flat().iter().zip(back.to_flat()) {
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn attribution_mass_equals_event_count() {
        let (index, shape, tau) = instance();
        let spec = ModelSpec::new(Some(Memory::Hawkes), Some(Memory::Hawkes), 2, TauStrategy::Zero).unwrap();
        let p = Params::filled(&Layout::new(shape.kind, spec), 0.3_f64);
        let resp = e_step(&TildeParams::from_params(&p), &index, &tau, spec).unwrap();
        assert_eq!(resp.events, 10);
        assert!((resp.total_mass() - 10.0).abs() < 1e-12);
        let tilde = TildeParams::from_params(&p);
        for e in index.edges() {
            for k in 0..e.len() {
                let r = event_responsibilities(&tilde, &index, &tau, spec, (e.src, e.dst), k).unwrap();
                assert!((r.total() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_hawkes() {
        let (index, shape, tau) = instance();
        let spec = ModelSpec::main_only(Memory::Markov, TauStrategy::Zero);
        let p = Params::filled(&Layout::new(shape.kind, spec), 0.3_f64);
        let err = em_fit(&index, &tau, spec, &shape, &p, &EmConfig::default()).unwrap_err();
        assert!(matches!(err, MegError::Unsupported(_)));
    }

    #[test]
    fn ascent() {
        let (index, shape, tau) = instance();
        let spec = ModelSpec::new(Some(Memory::Hawkes), Some(Memory::Hawkes), 1, TauStrategy::Zero).unwrap();
        let p = Params::filled(&Layout::new(shape.kind, spec), 0.2_f64);
        let report = em_fit(&index, &tau, spec, &shape, &p, &EmConfig { max_iter: 50, tol: 0.0 }).unwrap();
        for w in report.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{:?}", report.trace);
        }
    }
}
