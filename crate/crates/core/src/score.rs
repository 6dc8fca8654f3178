//! Time-rescaling p-values and Kolmogorov-Smirnov diagnostics.

use std::collections::BTreeMap;

use crate::error::{MegError, Result};
use crate::events::{EventIndex, EventLog, GraphKind};
use crate::likelihood::Evaluator;
use crate::model::{ModelSpec, TauStrategy};
use crate::params::Params;
use crate::scalar::Real;
use crate::tau::TauMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEvent {
    pub time: f64,
    pub src: usize,
    pub dst: usize,
    /// `exp(-(Lambda(t_k) - Lambda(t_{k-1})))` on the event's edge.
    pub pvalue: f64,
    /// The edge had no events in the training window.
    pub new_edge: bool,
    /// The edge never activates under the fitted changepoints, so the model
    /// gives no p-value; reported as 1.
    pub tau_infinite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeKs {
    pub src: usize,
    pub dst: usize,
    pub events: usize,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub events: Vec<ScoredEvent>,
    /// KS statistic of all p-values; `None` when nothing was scored.
    pub ks: Option<f64>,
    pub per_edge: Vec<EdgeKs>,
    /// `(uniform quantile, empirical quantile)` pairs.
    pub qq: Vec<(f64, f64)>,
}

impl ScoreReport {
    fn assemble(events: Vec<ScoredEvent>) -> Result<Self> {
        let pvalues: Vec<f64> = events.iter().map(|e| e.pvalue).collect();
        let ks = if pvalues.is_empty() {
            None
        } else {
            Some(ks_statistic(&pvalues)?)
        };
        let mut report = Self {
            events,
            ks,
            per_edge: Vec::new(),
            qq: qq_points(&pvalues, QQ_POINTS),
        };
        report.per_edge = per_edge_ks(&report)?;
        Ok(report)
    }

    pub fn pvalues(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.pvalue).collect()
    }

    pub fn new_edge_count(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .events
            .iter()
            .filter(|e| e.new_edge)
            .map(|e| (e.src, e.dst))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }
}

const QQ_POINTS: usize = 1000;

/// Scores every event of `test` given the training history.
///
/// Changepoints come from `tau` (estimated on `train`). Under the MLE
/// strategy an edge first seen in `test` starts at its first test event,
/// which therefore scores 1.
pub fn score_events<S: Real>(
    params: &Params<S>,
    spec: ModelSpec,
    tau: &TauMatrix,
    kind: GraphKind,
    train: &EventLog,
    test: &EventLog,
) -> Result<ScoreReport> {
    let train_end = train.horizon();
    if let Some(e) = test.events().iter().find(|e| e.time <= train_end) {
        return Err(MegError::Ordering {
            time: e.time,
            train_end,
        });
    }
    let combined = EventLog::concat(train, test)?;
    let index = EventIndex::build(&combined, kind)?;
    let train_index = EventIndex::build(train, kind)?;
    let mut tau = tau.clone();
    if spec.tau == TauStrategy::Mle {
        for edge in index.edges() {
            if train_index.edge_count(edge.src, edge.dst) == 0 && tau.get(edge.src, edge.dst) == f64::INFINITY {
                tau.set(edge.src, edge.dst, edge.times[0]);
            }
        }
    }
    let skip = |i: usize, j: usize| train_index.edge_count(i, j);
    let scored = score_with(params, spec, &tau, &index, skip)?;
    let mut cursor: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut events = Vec::with_capacity(test.len());
    for e in test.events() {
        let key = (e.src, e.dst);
        let k = cursor
            .entry(key)
            .or_insert_with(|| train_index.edge_count(e.src, e.dst));
        let (pvalue, tau_infinite) = scored[&key][*k];
        *k += 1;
        events.push(ScoredEvent {
            time: e.time,
            src: e.src,
            dst: e.dst,
            pvalue,
            new_edge: train_index.edge_count(e.src, e.dst) == 0,
            tau_infinite,
        });
    }
    ScoreReport::assemble(events)
}

/// In-sample p-values for every event of `train`.
pub fn score_training<S: Real>(
    params: &Params<S>,
    spec: ModelSpec,
    tau: &TauMatrix,
    kind: GraphKind,
    train: &EventLog,
) -> Result<ScoreReport> {
    let index = EventIndex::build(train, kind)?;
    let scored = score_with(params, spec, tau, &index, |_, _| 0)?;
    let mut cursor: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let events = train
        .events()
        .iter()
        .map(|e| {
            let key = (e.src, e.dst);
            let k = cursor.entry(key).or_insert(0);
            let (pvalue, tau_infinite) = scored[&key][*k];
            *k += 1;
            ScoredEvent {
                time: e.time,
                src: e.src,
                dst: e.dst,
                pvalue,
                new_edge: false,
                tau_infinite,
            }
        })
        .collect();
    ScoreReport::assemble(events)
}

type EdgeSamples = BTreeMap<(usize, usize), Vec<(f64, bool)>>;

/// p-values of every edge event from position `skip(i, j)` onwards, keyed by edge.
fn score_with<S: Real>(
    params: &Params<S>,
    spec: ModelSpec,
    tau: &TauMatrix,
    index: &EventIndex,
    skip: impl Fn(usize, usize) -> usize,
) -> Result<EdgeSamples> {
    let ev = Evaluator::new(params, index, spec)?;
    let mut out = BTreeMap::new();
    for edge in index.edges() {
        let (i, j) = (edge.src, edge.dst);
        let from = skip(i, j);
        let t0 = tau.get(i, j);
        let mut values = vec![(1.0, false); from];
        if t0 == f64::INFINITY {
            values.resize(edge.len(), (1.0, true));
        } else {
            let model = ev.edge(i, j, t0);
            for k in from..edge.len() {
                let t = edge.times[k];
                if t < t0 {
                    return Err(MegError::UndefinedIntensity {
                        src: i,
                        dst: j,
                        time: t,
                        tau: t0,
                    });
                }
                let previous = if k == 0 { t0 } else { edge.times[k - 1] };
                let increment = model.compensator_between(previous, t).to_f64_lossy();
                if !(increment.is_finite() && increment >= 0.0) {
                    return Err(MegError::NumericFailure {
                        src: i,
                        dst: j,
                        what: "compensator increment is not a finite nonnegative number",
                    });
                }
                values.push(((-increment).exp(), false));
            }
        }
        out.insert((i, j), values);
    }
    Ok(out)
}

fn check_sample(pvalues: &[f64]) -> Result<()> {
    if pvalues.is_empty() {
        return Err(MegError::InvalidSample("no p-values".into()));
    }
    if let Some(p) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(MegError::InvalidSample(format!("{p} is outside [0, 1]")));
    }
    Ok(())
}

/// One-sample KS distance between the sample and Uniform(0, 1).
pub fn ks_statistic(pvalues: &[f64]) -> Result<f64> {
    check_sample(pvalues)?;
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let i = k as f64 + 1.0;
            (i / m - p).max(p - (i - 1.0) / m)
        })
        .fold(0.0, f64::max))
}

/// Asymptotic p-value of a KS statistic `ks` from `m` observations, with
/// Stephens' small-sample correction.
pub fn ks_pvalue(ks: f64, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let root = (m as f64).sqrt();
    let x = (root + 0.12 + 0.11 / root) * ks;
    if x < 0.3 {
        return 1.0;
    }
    let mut total = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        total += if k as usize % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * total).clamp(0.0, 1.0)
}

/// KS statistic of each edge's own p-values, in `(src, dst)` order.
pub fn per_edge_ks(report: &ScoreReport) -> Result<Vec<EdgeKs>> {
    let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for e in &report.events {
        groups.entry((e.src, e.dst)).or_default().push(e.pvalue);
    }
    groups
        .into_iter()
        .map(|((src, dst), p)| {
            Ok(EdgeKs {
                src,
                dst,
                events: p.len(),
                ks: ks_statistic(&p)?,
            })
        })
        .collect()
}

/// Empirical quantiles of the sample at `(k - 0.5) / points`, `k = 1..=points`.
pub fn qq_points(pvalues: &[f64], points: usize) -> Vec<(f64, f64)> {
    if pvalues.is_empty() {
        return Vec::new();
    }
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    (1..=points)
        .map(|k| {
            let prob = (k as f64 - 0.5) / points as f64;
            let at = ((prob * m as f64).floor() as usize).min(m - 1);
            (prob, sorted[at])
        })
        .collect()
}
