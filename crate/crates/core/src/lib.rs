//! Mutually exciting point-process models on directed and bipartite graphs.
//!
//! Each edge `(i, j)` carries an intensity made of node main effects
//! (`alpha_i(t) + beta_j(t)`) and latent-factor interactions (`gamma_ij(t)`),
//! each optionally self-exciting with exponential kernels. The crate evaluates
//! the log-likelihood and its gradient in linear time, fits parameters by EM
//! or Adam, simulates by thinning and scores events by time rescaling.
//!
//! Numeric code is generic over [`Real`]; the aliases below fix `f64`.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adam;
pub mod em;
pub mod error;
pub mod events;
pub mod gradient;
pub mod likelihood;
pub mod model;
pub mod params;
pub mod scalar;
pub mod score;
pub mod simulate;
pub mod tau;
mod track;

pub use adam::{adam_fit, adam_fit_multi, default_init, uniform_init, AdamConfig, FitReport, InitOptions};
pub use em::{e_step, em_fit, m_step, EmConfig, Responsibilities, TildeParams};
pub use error::{MegError, Result};
pub use events::{excites, EdgeEvents, Event, EventIndex, EventLog, GraphKind, GraphShape};
pub use gradient::{finite_difference_gradient, grad_log_likelihood, GradientVector};
pub use likelihood::{
    compensator, compensator_increment, intensity, log_likelihood, log_likelihood_with_gradient, EdgeModel, Evaluator,
    RecursionState,
};
pub use model::{Memory, ModelSpec, TauStrategy};
pub use params::{Block, Layout, Params};
pub use scalar::{CompensatedSum, Real};
pub use score::{ks_pvalue, ks_statistic, per_edge_ks, score_events, score_training, EdgeKs, ScoreReport, ScoredEvent};
pub use simulate::{simulate, simulate_events, SimConfig};
pub use tau::{estimate_tau, TauMatrix};

pub type Params64 = Params<f64>;
pub type Params32 = Params<f32>;
pub type TildeParams64 = TildeParams<f64>;
pub type FitReport64 = FitReport<f64>;
pub type GradientVector64 = GradientVector<f64>;
