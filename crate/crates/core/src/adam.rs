//! Adam ascent on log-parameters, restarts and initialisation heuristics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{MegError, Result};
use crate::events::{EventIndex, GraphShape};
use crate::likelihood::log_likelihood_with_gradient;
use crate::model::ModelSpec;
use crate::params::{Block, Layout, Params};
use crate::scalar::{c, Real};
use crate::tau::TauMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub eta: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub eps: f64,
    pub max_iter: usize,
    /// Stop once every log-likelihood change over the last `window`
    /// iterations is below `tol * (1 + |log L|)`.
    pub tol: f64,
    pub window: usize,
    pub restarts: usize,
    /// Standard deviation of the log-normal perturbation applied to the
    /// initial point for every restart after the first.
    pub restart_jitter: f64,
    pub seed: u64,
    /// For models with Hawkes components, start from a Markov fit first.
    pub warm_start: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            eta: 0.05,
            rho1: 0.9,
            rho2: 0.99,
            eps: 1e-8,
            max_iter: 2000,
            tol: 1e-6,
            window: 5,
            restarts: 1,
            restart_jitter: 0.5,
            seed: 0,
            warm_start: true,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eta > 0.0
            && (0.0..1.0).contains(&self.rho1)
            && self.rho1 > 0.0
            && (0.0..1.0).contains(&self.rho2)
            && self.rho2 > 0.0
            && self.eps > 0.0
            && self.tol >= 0.0
            && self.window > 0
            && self.restarts > 0
            && self.restart_jitter >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(MegError::InvalidConfig(format!("invalid Adam settings {self:?}")))
        }
    }
}

/// Result of a fit. `trace[k]` is the log-likelihood after `k` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<S> {
    pub params: Params<S>,
    pub log_likelihood: S,
    pub trace: Vec<S>,
    pub converged: bool,
    pub iterations: usize,
    pub best_restart: usize,
    pub failed_restarts: usize,
}

/// Moment estimates of one Adam run over a flat log-parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    first: Vec<S>,
    second: Vec<S>,
    steps: i32,
}

impl<S: Real> AdamState<S> {
    pub fn new(len: usize) -> Self {
        Self {
            first: vec![S::zero(); len],
            second: vec![S::zero(); len],
            steps: 0,
        }
    }

    /// One multiplicative ascent step: `grad` is `d log L / d params`.
    pub fn step(&mut self, cfg: &AdamConfig, params: &mut [S], grad: &[S]) {
        self.steps += 1;
        let (rho1, rho2): (S, S) = (c(cfg.rho1), c(cfg.rho2));
        let (eta, eps): (S, S) = (c(cfg.eta), c(cfg.eps));
        let one = S::one();
        let fix1 = one - rho1.powi(self.steps);
        let fix2 = one - rho2.powi(self.steps);
        for k in 0..params.len() {
            let g = grad[k] * params[k];
            self.first[k] = rho1 * self.first[k] + (one - rho1) * g;
            self.second[k] = rho2 * self.second[k] + (one - rho2) * g * g;
            let m_hat = self.first[k] / fix1;
            let v_hat = self.second[k] / fix2;
            params[k] = params[k] * (eta * m_hat / (v_hat.sqrt() + eps)).exp();
        }
    }
}

/// Maximises `objective` (returning value and gradient) from `start`.
pub fn maximize<S: Real>(
    cfg: &AdamConfig,
    start: &[S],
    mut objective: impl FnMut(&[S]) -> Result<(S, Vec<S>)>,
) -> Result<(Vec<S>, Vec<S>, bool)> {
    let mut x = start.to_vec();
    let mut state = AdamState::new(x.len());
    let mut trace = Vec::new();
    let tol: S = c(cfg.tol);
    for _ in 0..=cfg.max_iter {
        let (value, grad) = objective(&x)?;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(MegError::NumericFailure {
                src: 0,
                dst: 0,
                what: "non-finite log-likelihood or gradient during Adam",
            });
        }
        trace.push(value);
        if trace.len() > cfg.window {
            let recent = &trace[trace.len() - cfg.window - 1..];
            let scale = tol * (S::one() + value.abs());
            if recent.windows(2).all(|w| (w[1] - w[0]).abs() < scale) {
                return Ok((x, trace, true));
            }
        }
        if trace.len() > cfg.max_iter {
            break;
        }
        state.step(cfg, &mut x, &grad);
    }
    Ok((x, trace, false))
}

/// Fits by Adam from `init` plus `cfg.restarts - 1` perturbed copies of it.
pub fn adam_fit<S: Real>(
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    shape: &GraphShape,
    init: &Params<S>,
    cfg: &AdamConfig,
) -> Result<FitReport<S>> {
    cfg.validate()?;
    let layout = Layout::new(shape.kind, spec);
    init.validate(&layout)?;
    let init = if cfg.warm_start && spec.has_hawkes() {
        let relaxed = spec.markov_relaxation();
        let plain = AdamConfig {
            warm_start: false,
            restarts: 1,
            ..*cfg
        };
        match adam_fit(index, tau, relaxed, shape, init, &plain) {
            Ok(report) => report.params,
            Err(e) => {
                log::warn!("Markov warm start failed ({e}); using the given initial point");
                init.clone()
            }
        }
    } else {
        init.clone()
    };
    let mut inits = vec![init.clone()];
    for r in 1..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let sigma = cfg.restart_jitter;
        inits.push(init.map(|v| {
            let z: f64 = rng.sample(StandardNormal);
            v * c::<S>((sigma * z).exp())
        }));
    }
    let plain = AdamConfig {
        warm_start: false,
        ..*cfg
    };
    adam_fit_multi(index, tau, spec, shape, &inits, &plain)
}

/// Fits once from each initial point and keeps the best final log-likelihood.
pub fn adam_fit_multi<S: Real>(
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    shape: &GraphShape,
    inits: &[Params<S>],
    cfg: &AdamConfig,
) -> Result<FitReport<S>> {
    cfg.validate()?;
    let layout = Layout::new(shape.kind, spec);
    let horizon = index.horizon();
    let mut best: Option<FitReport<S>> = None;
    let mut failed = 0;
    let mut last_error = String::from("no initial points");
    for (r, init) in inits.iter().enumerate() {
        let outcome = init.validate(&layout).and_then(|_| {
            maximize(cfg, &init.to_flat(), |flat| {
                let p = Params::from_flat(&layout, flat)?;
                log_likelihood_with_gradient(&p, index, tau, spec, horizon)
            })
        });
        match outcome {
            Ok((flat, trace, converged)) => {
                let value = *trace.last().expect("at least one evaluation");
                log::debug!("restart {r}: log L = {value} after {} updates", trace.len() - 1);
                if best.as_ref().is_none_or(|b| value > b.log_likelihood) {
                    best = Some(FitReport {
                        params: Params::from_flat(&layout, &flat)?,
                        log_likelihood: value,
                        iterations: trace.len() - 1,
                        trace,
                        converged,
                        best_restart: r,
                        failed_restarts: 0,
                    });
                }
            }
            Err(e) => {
                log::warn!("restart {r} failed: {e}");
                failed += 1;
                last_error = e.to_string();
            }
        }
    }
    match best {
        Some(mut report) => {
            report.failed_restarts = failed;
            Ok(report)
        }
        None => Err(MegError::FitFailed {
            restarts: inits.len(),
            last: last_error,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitOptions {
    /// Start interaction baselines at `sqrt(u)` instead of a small constant.
    pub sqrt_gamma: bool,
    /// Seed for the jitter added to interaction blocks when `dim > 1`.
    pub seed: u64,
}

const INTERACTION_START: f64 = 1e-4;
const INTERACTION_DECAY_START: f64 = 5e-4;
const INTERACTION_JITTER: f64 = 2e-5;

/// Data-driven starting point: node rates `u_i = N_i / (n T)`, floored at
/// `1 / (10 n T)`, with jump sizes equal to the rates and decay offsets three
/// times larger.
pub fn default_init<S: Real>(
    index: &EventIndex,
    shape: &GraphShape,
    spec: ModelSpec,
    opts: InitOptions,
) -> Result<Params<S>> {
    spec.validate()?;
    let layout = Layout::new(shape.kind, spec);
    if index.n_src() != layout.n_src || index.n_dst() != layout.n_dst {
        return Err(MegError::InvalidConfig("event index does not match the graph".into()));
    }
    let horizon = index.horizon();
    if !(horizon > 0.0) {
        return Err(MegError::InvalidConfig(
            "cannot initialise from an empty time window".into(),
        ));
    }
    let rate = |count: usize, n: usize| {
        let scale = n as f64 * horizon;
        (count as f64 / scale).max(0.1 / scale)
    };
    let u_src: Vec<f64> = (0..layout.n_src)
        .map(|i| rate(index.src_times(i).len(), layout.n_dst))
        .collect();
    let u_dst: Vec<f64> = (0..layout.n_dst)
        .map(|j| rate(index.dst_times(j).len(), layout.n_src))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let jitter = layout.dim > 1;
    let params = Params::from_fn(&layout, |block, row, _| {
        let value = match block {
            Block::Alpha | Block::Mu => u_src[row],
            Block::Phi => 3.0 * u_src[row],
            Block::Beta | Block::MuDst => u_dst[row],
            Block::PhiDst => 3.0 * u_dst[row],
            Block::Gamma if opts.sqrt_gamma => u_src[row].sqrt(),
            Block::GammaDst if opts.sqrt_gamma => u_dst[row].sqrt(),
            Block::Gamma | Block::GammaDst | Block::Nu | Block::NuDst => INTERACTION_START,
            Block::Theta | Block::ThetaDst => INTERACTION_DECAY_START,
        };
        if jitter && block.is_matrix() {
            loop {
                let z: f64 = rng.sample(StandardNormal);
                let moved = value + INTERACTION_JITTER * z;
                if moved > 0.0 {
                    break c(moved);
                }
            }
        } else {
            c(value)
        }
    });
    params.validate(&layout)?;
    Ok(params)
}

/// Every entry drawn independently from `Uniform(lo, hi)`.
pub fn uniform_init<S: Real>(layout: &Layout, lo: f64, hi: f64, seed: u64) -> Result<Params<S>> {
    if !(lo > 0.0 && hi > lo) {
        return Err(MegError::InvalidConfig(format!("need 0 < lo < hi, got ({lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Params::from_fn(layout, |_, _, _| c(rng.random_range(lo..hi))))
}
