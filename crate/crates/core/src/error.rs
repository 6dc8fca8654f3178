use thiserror::Error;

use crate::events::Event;

#[derive(Debug, Error)]
pub enum MegError {
    #[error("event #{position} {event:?} references a node outside the graph ({detail})")]
    NodeOutOfRange {
        position: usize,
        event: Event,
        detail: String,
    },

    #[error("invalid event log: {0}")]
    InvalidLog(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("intensity undefined on edge ({src}, {dst}) at t = {time}: before changepoint tau = {tau}")]
    UndefinedIntensity {
        src: usize,
        dst: usize,
        time: f64,
        tau: f64,
    },

    #[error("non-finite value while evaluating edge ({src}, {dst}): {what}")]
    NumericFailure { src: usize, dst: usize, what: &'static str },

    #[error("edge event index {k} out of range for edge with {n} events")]
    EventOutOfRange { k: usize, n: usize },

    #[error("unsupported model for this method: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("all {restarts} optimisation runs failed: {last}")]
    FitFailed { restarts: usize, last: String },

    #[error("test event at t = {time} does not follow the training window ending at {train_end}")]
    Ordering { time: f64, train_end: f64 },

    #[error("simulation stopped after {max_events} events before reaching the horizon")]
    SimulationTruncated {
        max_events: usize,
        partial: Box<crate::events::EventLog>,
    },

    #[error("invalid p-value sample: {0}")]
    InvalidSample(String),
}

pub type Result<T, E = MegError> = std::result::Result<T, E>;
