//! Reference implementations used to check `meg-core`.
//!
//! Everything here is written straight from the model definition, with
//! quadratic-time sums over the whole history, and shares no code with the
//! linear-time evaluator beyond the plain data types.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use meg_core::{excites, Event, EventLog, GraphKind, GraphShape, Memory, ModelSpec, Params, TauMatrix, TauStrategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random model, parameter vector, event log and changepoint matrix.
#[derive(Debug, Clone)]
pub struct Instance {
    pub kind: GraphKind,
    pub spec: ModelSpec,
    pub params: Params<f64>,
    pub log: EventLog,
    pub tau: TauMatrix,
}

impl Instance {
    pub fn shape(&self) -> GraphShape {
        GraphShape::new(self.kind)
    }

    pub fn index(&self) -> meg_core::EventIndex {
        meg_core::EventIndex::build(&self.log, self.kind).expect("generated events fit the graph")
    }
}

/// Shape of the random instances.
#[derive(Debug, Clone, Copy)]
pub struct InstanceOptions {
    pub max_nodes: usize,
    pub max_events: usize,
    /// Allow changepoints strictly between zero and the first edge event.
    pub clipped_tau: bool,
    /// Allow a positive tie offset and repeated timestamps.
    pub ties: bool,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        Self {
            max_nodes: 5,
            max_events: 500,
            clipped_tau: true,
            ties: true,
        }
    }
}

pub fn random_memory(rng: &mut impl Rng) -> Memory {
    [Memory::Poisson, Memory::Markov, Memory::Hawkes][rng.random_range(0..3)]
}

/// A random valid spec with interaction dimension at most `max_dim`.
pub fn random_spec(rng: &mut impl Rng, max_dim: usize) -> ModelSpec {
    let (main, inter) = match rng.random_range(0..3) {
        0 => (Some(random_memory(rng)), None),
        1 => (None, Some(random_memory(rng))),
        _ => (Some(random_memory(rng)), Some(random_memory(rng))),
    };
    ModelSpec::new(main, inter, rng.random_range(1..=max_dim), TauStrategy::Zero).expect("valid spec")
}

pub fn random_instance(seed: u64, spec: ModelSpec, opts: InstanceOptions) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = if rng.random_bool(0.5) {
        GraphKind::Directed {
            n: rng.random_range(1..=opts.max_nodes),
        }
    } else {
        GraphKind::Bipartite {
            n_src: rng.random_range(1..=opts.max_nodes),
            n_dst: rng.random_range(1..=opts.max_nodes),
        }
    };
    let horizon = rng.random_range(5.0..50.0);
    let m = rng.random_range(1..=opts.max_events);
    let dt = if opts.ties && rng.random_bool(0.3) {
        rng.random_range(0.0..0.05)
    } else {
        0.0
    };
    let mut times: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..horizon)).collect();
    if opts.ties {
        for k in 1..m {
            if rng.random_bool(0.1) {
                times[k] = times[k - 1];
            }
        }
    }
    times.sort_by(f64::total_cmp);
    let events: Vec<Event> = times
        .into_iter()
        .map(|t| Event::new(t, rng.random_range(0..kind.n_src()), rng.random_range(0..kind.n_dst())))
        .collect();
    let log = EventLog::new(events, horizon, dt).expect("sorted events inside the horizon");
    let params = random_params(&mut rng, kind, spec, 0.05, 1.0);
    let mut tau = TauMatrix::uniform(kind, 0.0);
    let mut first = std::collections::BTreeMap::new();
    for e in log.events() {
        first.entry((e.src, e.dst)).or_insert(e.time);
    }
    for i in 0..kind.n_src() {
        for j in 0..kind.n_dst() {
            let limit = first.get(&(i, j)).copied();
            let t = match (opts.clipped_tau, rng.random_range(0..4), limit) {
                (_, 0, _) => 0.0,
                (true, 1 | 2, Some(l)) => rng.random_range(0.0..=l),
                (true, 1 | 2, None) => rng.random_range(0.0..horizon),
                (_, 3, None) => f64::INFINITY,
                (_, _, Some(l)) => l,
                _ => 0.0,
            };
            tau.set(i, j, t);
        }
    }
    Instance {
        kind,
        spec,
        params,
        log,
        tau,
    }
}

/// Every entry uniform in `(lo, hi)`.
pub fn random_params(rng: &mut impl Rng, kind: GraphKind, spec: ModelSpec, lo: f64, hi: f64) -> Params<f64> {
    Params::from_fn(&meg_core::Layout::new(kind, spec), |_, _, _| rng.random_range(lo..hi))
}

/// Sum of `jump * exp(-rate (t - s))` over the contributing `sources`.
fn excitation(sources: &[f64], memory: Memory, rate: f64, t: f64, dt: f64) -> f64 {
    let active: Vec<f64> = sources.iter().copied().filter(|&s| excites(s, t, dt)).collect();
    let kernel = |s: f64| (-rate * (t - s)).exp();
    match memory {
        Memory::Poisson => 0.0,
        Memory::Markov => active.last().map_or(0.0, |&s| kernel(s)),
        Memory::Hawkes => active.iter().map(|&s| kernel(s)).sum(),
    }
}

/// Times of the events selected by `keep`.
fn times_where(log: &EventLog, keep: impl Fn(&Event) -> bool) -> Vec<f64> {
    log.events().iter().filter(|e| keep(e)).map(|e| e.time).collect()
}

/// Intensity of edge `(i, j)` at `t` by direct summation over the history.
pub fn brute_intensity(params: &Params<f64>, spec: ModelSpec, log: &EventLog, i: usize, j: usize, t: f64) -> f64 {
    let dt = log.dt();
    let mut lambda = 0.0;
    if let Some(m) = spec.main {
        lambda += params.alpha[i] + params.beta[j];
        if m != Memory::Poisson {
            let src = times_where(log, |e| e.src == i);
            let dst = times_where(log, |e| e.dst == j);
            lambda += params.mu[i] * excitation(&src, m, params.mu[i] + params.phi[i], t, dt);
            lambda += params.mu_dst[j] * excitation(&dst, m, params.mu_dst[j] + params.phi_dst[j], t, dt);
        }
    }
    if let Some(m) = spec.interaction {
        let edge = times_where(log, |e| e.src == i && e.dst == j);
        for q in 0..spec.dim {
            lambda += params.gamma[[i, q]] * params.gamma_dst[[j, q]];
            if m != Memory::Poisson {
                let rate =
                    (params.nu[[i, q]] + params.theta[[i, q]]) * (params.nu_dst[[j, q]] + params.theta_dst[[j, q]]);
                lambda += params.nu[[i, q]] * params.nu_dst[[j, q]] * excitation(&edge, m, rate, t, dt);
            }
        }
    }
    lambda
}

/// `int_from^to` of one excitation sum, term by term.
fn integrated_excitation(sources: &[f64], memory: Memory, rate: f64, from: f64, to: f64, dt: f64) -> f64 {
    if to <= from {
        return 0.0;
    }
    let piece = |s: f64, a: f64, b: f64| {
        if b <= a {
            0.0
        } else {
            ((-rate * (a - s)).exp() - (-rate * (b - s)).exp()) / rate
        }
    };
    match memory {
        Memory::Poisson => 0.0,
        Memory::Hawkes => sources.iter().map(|&s| piece(s, from.max(s + dt), to)).sum(),
        Memory::Markov => {
            // Event h is the latest contributor from its activation until the next one.
            let mut total = 0.0;
            for (h, &s) in sources.iter().enumerate() {
                let start = s + dt;
                let stop = sources.get(h + 1).map_or(f64::INFINITY, |&n| n + dt);
                total += piece(s, start.max(from), stop.min(to));
            }
            total
        }
    }
}

/// Compensator of `(i, j)` over `[tau, t]` from per-event closed-form integrals.
pub fn direct_compensator(
    params: &Params<f64>,
    spec: ModelSpec,
    log: &EventLog,
    i: usize,
    j: usize,
    tau: f64,
    t: f64,
) -> f64 {
    if !(t > tau) {
        return 0.0;
    }
    let dt = log.dt();
    let span = t - tau;
    let mut total = 0.0;
    if let Some(m) = spec.main {
        total += (params.alpha[i] + params.beta[j]) * span;
        if m != Memory::Poisson {
            let src = times_where(log, |e| e.src == i);
            let dst = times_where(log, |e| e.dst == j);
            total += params.mu[i] * integrated_excitation(&src, m, params.mu[i] + params.phi[i], tau, t, dt);
            total +=
                params.mu_dst[j] * integrated_excitation(&dst, m, params.mu_dst[j] + params.phi_dst[j], tau, t, dt);
        }
    }
    if let Some(m) = spec.interaction {
        let edge = times_where(log, |e| e.src == i && e.dst == j);
        for q in 0..spec.dim {
            total += params.gamma[[i, q]] * params.gamma_dst[[j, q]] * span;
            if m != Memory::Poisson {
                let rate =
                    (params.nu[[i, q]] + params.theta[[i, q]]) * (params.nu_dst[[j, q]] + params.theta_dst[[j, q]]);
                total += params.nu[[i, q]] * params.nu_dst[[j, q]] * integrated_excitation(&edge, m, rate, tau, t, dt);
            }
        }
    }
    total
}

/// Log-likelihood as a double sum: every event's intensity from the full
/// history, minus every active edge's compensator.
pub fn naive_log_likelihood(
    params: &Params<f64>,
    spec: ModelSpec,
    log: &EventLog,
    kind: GraphKind,
    tau: &TauMatrix,
) -> f64 {
    let horizon = log.horizon();
    let mut total = 0.0;
    for i in 0..kind.n_src() {
        for j in 0..kind.n_dst() {
            let start = tau.get(i, j);
            if !(start < horizon) {
                continue;
            }
            for e in log.events().iter().filter(|e| e.src == i && e.dst == j) {
                total += brute_intensity(params, spec, log, i, j, e.time).ln();
            }
            total -= direct_compensator(params, spec, log, i, j, start, horizon);
        }
    }
    total
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn refine(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    refine(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 50)
}

/// Compensator of `(i, j)` over `[tau, t]` by quadrature of the brute-force
/// intensity, split at every point where the intensity jumps.
#[allow(clippy::too_many_arguments)]
pub fn quadrature_compensator(
    params: &Params<f64>,
    spec: ModelSpec,
    log: &EventLog,
    i: usize,
    j: usize,
    tau: f64,
    t: f64,
    tol: f64,
) -> f64 {
    if !(t > tau) {
        return 0.0;
    }
    let mut cuts: Vec<f64> = log
        .events()
        .iter()
        .filter(|e| e.src == i || e.dst == j)
        .map(|e| e.time + log.dt())
        .filter(|&c| c > tau && c < t)
        .collect();
    cuts.push(tau);
    cuts.push(t);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let pieces = (cuts.len() - 1) as f64;
    cuts.windows(2)
        .map(|w| {
            // Evaluate strictly inside the piece so every jump sits on a boundary.
            let (a, b) = (w[0], w[1]);
            let f = |u: f64| brute_intensity(params, spec, log, i, j, u.clamp(a + (b - a) * 1e-12, b));
            adaptive_simpson(&f, a, b, tol / pieces)
        })
        .sum()
}

/// Compensator increment between consecutive events of edge `(i, j)` for
/// Hawkes memory, no tie offset and `d = 1`, written through excitation sums
/// just before each event and event counts:
/// `jump / rate * ((N(t_k-) - N(t_{k-1}-)) - (psi(t_k) - psi(t_{k-1})))`
/// per component, plus the baseline times the gap.
pub fn sequential_increment(
    params: &Params<f64>,
    spec: ModelSpec,
    log: &EventLog,
    i: usize,
    j: usize,
    tau: f64,
    k: usize,
) -> f64 {
    assert_eq!(log.dt(), 0.0, "the sequential form assumes no tie offset");
    let edge = times_where(log, |e| e.src == i && e.dst == j);
    let (now, before) = (edge[k], if k == 0 { tau } else { edge[k - 1] });
    let psi = |times: &[f64], rate: f64, t: f64| {
        times
            .iter()
            .filter(|&&s| s < t)
            .map(|&s| (-rate * (t - s)).exp())
            .sum::<f64>()
    };
    let count = |times: &[f64], t: f64| times.iter().filter(|&&s| s < t).count() as f64;
    let term = |times: &[f64], jump: f64, rate: f64| {
        jump / rate * ((count(times, now) - count(times, before)) - (psi(times, rate, now) - psi(times, rate, before)))
    };
    let mut total = params.baseline(i, j) * (now - before);
    if spec.main == Some(Memory::Hawkes) {
        let src = times_where(log, |e| e.src == i);
        let dst = times_where(log, |e| e.dst == j);
        total += term(&src, params.mu[i], params.mu[i] + params.phi[i]);
        total += term(&dst, params.mu_dst[j], params.mu_dst[j] + params.phi_dst[j]);
    }
    if spec.interaction == Some(Memory::Hawkes) {
        let rate = (params.nu[[i, 0]] + params.theta[[i, 0]]) * (params.nu_dst[[j, 0]] + params.theta_dst[[j, 0]]);
        total += term(&edge, params.nu[[i, 0]] * params.nu_dst[[j, 0]], rate);
    }
    total
}

/// Relative difference `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Worst relative disagreement between two gradients, compared on the
/// log-parameter scale (`g * p`). Differences below the rounding noise of a
/// central difference of a value of size `log_lik` with step `step` are
/// ignored. Returns `(error, index of the worst entry)`.
pub fn gradient_disagreement(
    analytic: &[f64],
    numeric: &[f64],
    params: &[f64],
    log_lik: f64,
    step: f64,
) -> (f64, usize) {
    let floor = 10.0 * f64::EPSILON * log_lik.abs().max(1.0) / step;
    analytic
        .iter()
        .zip(numeric)
        .zip(params)
        .map(|((&a, &n), &p)| relative_error(a * p, n * p, floor))
        .enumerate()
        .fold((0.0, 0), |best, (k, e)| if e > best.0 { (e, k) } else { best })
}
