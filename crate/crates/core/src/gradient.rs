//! Gradient of the log-likelihood, plus a finite-difference reference.

use crate::error::{MegError, Result};
use crate::events::EventIndex;
use crate::likelihood::{log_likelihood, log_likelihood_with_gradient};
use crate::model::ModelSpec;
use crate::params::{Block, Layout, Params};
use crate::scalar::Real;
use crate::tau::TauMatrix;

/// Derivatives with respect to every free parameter, in canonical flat order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector<S> {
    layout: Layout,
    values: Vec<S>,
}

impl<S: Real> GradientVector<S> {
    pub fn new(layout: Layout, values: Vec<S>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(MegError::InvalidParams(format!(
                "gradient has {} entries, layout needs {}",
                values.len(),
                layout.len()
            )));
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, block: Block) -> &[S] {
        let at = self.layout.offset(block);
        &self.values[at..at + self.layout.block_len(block)]
    }

    /// Derivatives with respect to log-parameters: `g * params`.
    pub fn to_log_space(&self, params: &Params<S>) -> Vec<S> {
        self.values.iter().zip(params.to_flat()).map(|(&g, p)| g * p).collect()
    }
}

fn layout_for(index: &EventIndex, spec: ModelSpec) -> Layout {
    Layout::new(
        crate::events::GraphKind::Bipartite {
            n_src: index.n_src(),
            n_dst: index.n_dst(),
        },
        spec,
    )
}

/// Exact gradient of the log-likelihood, from the same pass that evaluates it.
pub fn grad_log_likelihood<S: Real>(
    params: &Params<S>,
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    horizon: f64,
) -> Result<GradientVector<S>> {
    let (_, g) = log_likelihood_with_gradient(params, index, tau, spec, horizon)?;
    GradientVector::new(layout_for(index, spec), g)
}

/// Central differences with multiplicative perturbations `p * exp(+-step)`,
/// divided by the actual distance between the two perturbed values.
pub fn finite_difference_gradient<S: Real>(
    params: &Params<S>,
    index: &EventIndex,
    tau: &TauMatrix,
    spec: ModelSpec,
    horizon: f64,
    step: f64,
) -> Result<GradientVector<S>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(MegError::InvalidConfig(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let layout = layout_for(index, spec);
    let flat = params.to_flat();
    let h = S::from_f64_lossy(step);
    let mut out = Vec::with_capacity(flat.len());
    for k in 0..flat.len() {
        let eval = |factor: S| -> Result<S> {
            let mut moved = flat.clone();
            moved[k] = flat[k] * factor;
            let p = Params::from_flat(&layout, &moved)?;
            log_likelihood(&p, index, tau, spec, horizon)
        };
        let (hi, lo) = (h.exp(), (-h).exp());
        let up = eval(hi)?;
        let down = eval(lo)?;
        out.push((up - down) / (flat[k] * hi - flat[k] * lo));
    }
    GradientVector::new(layout, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, EventLog, GraphKind};
    use crate::model::{Memory, TauStrategy};

    #[test]
    fn rejects_bad_step() {
        let kind = GraphKind::Directed { n: 1 };
        let log = EventLog::new(vec![Event::new(1.0, 0, 0)], 2.0, 0.0).unwrap();
        let index = EventIndex::build(&log, kind).unwrap();
        let spec = ModelSpec::main_only(Memory::Poisson, TauStrategy::Zero);
        let params = Params::filled(&Layout::new(kind, spec), 0.5);
        let tau = TauMatrix::uniform(kind, 0.0);
        assert!(finite_difference_gradient(&params, &index, &tau, spec, 2.0, 0.0).is_err());
        assert!(finite_difference_gradient(&params, &index, &tau, spec, 2.0, -1.0).is_err());
    }

    #[test]
    fn linear_dependence_is_differenced_exactly() {
        // With no events the log-likelihood is linear in each baseline.
        let kind = GraphKind::Directed { n: 2 };
        let log = EventLog::empty(3.0, 0.0).unwrap();
        let index = EventIndex::build(&log, kind).unwrap();
        let spec = ModelSpec::main_only(Memory::Poisson, TauStrategy::Zero);
        let params = Params::filled(&Layout::new(kind, spec), 0.5_f64);
        let tau = TauMatrix::uniform(kind, 0.0);
        let fd = finite_difference_gradient(&params, &index, &tau, spec, 3.0, 0.1).unwrap();
        for &g in fd.values() {
            assert!((g + 6.0).abs() < 1e-12);
        }
        let exact = grad_log_likelihood(&params, &index, &tau, spec, 3.0).unwrap();
        assert_eq!(exact.block(Block::Alpha), &[-6.0, -6.0]);
    }
}
