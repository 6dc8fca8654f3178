//! Exponentially decaying excitation generated by one sorted event sequence.
//!
//! For a sequence `s_1 <= ... <= s_N`, decay rate `kappa` and memory `r`,
//! the excitation at `t` is `E(t) = sum exp(-kappa (t - s_h))` over the
//! contributing events (the last one for Markov memory, all for Hawkes).
//! Event `h` starts contributing at its activation time `a_h = s_h + dt`.
//! Between activations `E` is a single decaying exponential, so the values
//! right after each activation and the running integral are enough to
//! evaluate `E`, `dE/dkappa`, `int_0^x E` and its derivative anywhere.

use crate::events::excites;
use crate::model::Memory;
use crate::scalar::{c, decay, Real};

#[derive(Debug, Clone)]
pub(crate) struct Track<'a, S> {
    times: &'a [f64],
    dt: f64,
    kappa: S,
    /// Excitation right after activation `h`, and its kappa-derivative.
    level: Vec<(S, S)>,
    /// Integral of the excitation over `[0, a_h]`, and its kappa-derivative.
    prefix: Vec<(S, S)>,
    /// Excitation at each event's own time, and its kappa-derivative.
    at_own: Vec<(S, S)>,
}

/// `int_0^delta g exp(-kappa u) du` and its kappa-derivative, where `g` and
/// `gk` are the starting level and its kappa-derivative.
#[inline]
pub(crate) fn segment_integral<S: Real>(g: S, gk: S, kappa: S, delta: S) -> (S, S) {
    if delta <= S::zero() {
        return (S::zero(), S::zero());
    }
    let x = kappa * delta;
    let one_minus = -(-x).exp_m1();
    let value = g * one_minus / kappa;
    let deriv = gk * one_minus / kappa + g * shape_derivative(x) / (kappa * kappa);
    (value, deriv)
}

/// `x exp(-x) - (1 - exp(-x))`, accurate near zero.
#[inline]
fn shape_derivative<S: Real>(x: S) -> S {
    if x < c(0.1) {
        // sum_{n>=2} (-1)^n (1 - n) x^n / n!
        let mut term = x * x / c(2.0);
        let mut acc = -term;
        for n in 3..=12usize {
            term = term * x / S::from_usize_lossy(n);
            let coef = S::from_usize_lossy(n - 1);
            let signed = if n % 2 == 0 { -coef } else { coef };
            acc = acc + signed * term;
        }
        acc
    } else {
        x * (-x).exp() - (-(-x).exp_m1())
    }
}

impl<'a, S: Real> Track<'a, S> {
    pub(crate) fn build(times: &'a [f64], dt: f64, kappa: S, memory: Memory) -> Self {
        debug_assert!(memory.is_self_exciting());
        let n = times.len();
        let mut level = Vec::with_capacity(n);
        let mut prefix = Vec::with_capacity(n);
        let dt_s: S = c(dt);
        let fresh = decay(kappa, dt_s);
        let fresh_k = -dt_s * fresh;
        for h in 0..n {
            if h == 0 {
                level.push((fresh, fresh_k));
                prefix.push((S::zero(), S::zero()));
                continue;
            }
            let delta: S = c(times[h] - times[h - 1]);
            let (g, gk) = level[h - 1];
            let (p, pk) = prefix[h - 1];
            let (seg, segk) = segment_integral(g, gk, kappa, delta);
            prefix.push((p + seg, pk + segk));
            let next = match memory {
                Memory::Hawkes => {
                    let e = decay(kappa, delta);
                    (g * e + fresh, e * (gk - delta * g) + fresh_k)
                }
                _ => (fresh, fresh_k),
            };
            level.push(next);
        }
        let mut track = Self {
            times,
            dt,
            kappa,
            level,
            prefix,
            at_own: Vec::with_capacity(n),
        };
        let mut contributing = 0;
        for k in 0..n {
            let t = times[k];
            while contributing < n && excites(times[contributing], t, dt) {
                contributing += 1;
            }
            let value = track.level_at(contributing, t);
            track.at_own.push(value);
        }
        track
    }

    /// Excitation at `t` given that the first `h` events contribute.
    #[inline]
    fn level_at(&self, h: usize, t: f64) -> (S, S) {
        if h == 0 {
            return (S::zero(), S::zero());
        }
        let (g, gk) = self.level[h - 1];
        let delta: S = c(t - (self.times[h - 1] + self.dt));
        let e = decay(self.kappa, delta);
        let delta = delta.max(S::zero());
        (g * e, e * (gk - delta * g))
    }

    /// Excitation (and kappa-derivative) at the time of the `k`-th event.
    #[inline]
    pub(crate) fn at_event(&self, k: usize) -> (S, S) {
        self.at_own[k]
    }

    /// Excitation (and kappa-derivative) at an arbitrary time.
    pub(crate) fn at(&self, t: f64) -> (S, S) {
        let h = self.times.partition_point(|&s| excites(s, t, self.dt));
        self.level_at(h, t)
    }

    /// `int_0^x E(u) du` and its kappa-derivative.
    pub(crate) fn integral_to(&self, x: f64) -> (S, S) {
        let h = self.times.partition_point(|&s| s + self.dt <= x);
        if h == 0 {
            return (S::zero(), S::zero());
        }
        let (g, gk) = self.level[h - 1];
        let (p, pk) = self.prefix[h - 1];
        let delta: S = c(x - (self.times[h - 1] + self.dt));
        let (seg, segk) = segment_integral(g, gk, self.kappa, delta);
        (p + seg, pk + segk)
    }

    /// `int_from^to E(u) du` and its kappa-derivative (zero when `to <= from`).
    pub(crate) fn integral(&self, from: f64, to: f64) -> (S, S) {
        if to <= from {
            return (S::zero(), S::zero());
        }
        let (hi, hik) = self.integral_to(to);
        if from <= 0.0 {
            return (hi, hik);
        }
        let (lo, lok) = self.integral_to(from);
        (hi - lo, hik - lok)
    }
}
