//! Constrained reinforcement learning on the product belief MDP.
//!
//! Each step picks an action ε-greedily from the safe set, simulates it
//! against a hidden state drawn from the current belief, records the
//! transition in the episode store and backs up `Q_p` and `Q_r` at the
//! visited point from the empirical successor distribution. Then it restarts
//! from a point drawn uniformly from the store.
//!
//! Beliefs are keyed by rounding to 6 decimals; a key always stands for the
//! first belief stored under it.

mod config;
mod evaluate;
mod learn;
mod select;
mod store;

pub use config::{Exploitation, LearnerConfig};
pub use evaluate::{evaluate_policy, EvaluationReport, RunReport};
pub use learn::{
    learn, write_metrics_csv, LearnOutcome, LearnReport, Learner, MetricsRow, SafetyAudit,
};
pub use select::{choose_action, ActionChooser};
pub use store::{
    record_transition, Choice, EmpiricalModel, EpisodeStore, PointKey, SuccessorCount,
    TransitionRecord,
};

pub use crate::value::safe_actions;

use thiserror::Error;

use crate::product::ProductError;
use crate::value::ValueError;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),

    #[error("inconsistent record: {0}")]
    InconsistentRecord(String),

    #[error("no safe action at {state}")]
    NoSafeAction { state: String },

    #[error("learning did not converge in {steps} steps (residual {residual:e})")]
    NonConvergence {
        steps: u64,
        residual: f64,
        partial: Box<LearnOutcome>,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Value(#[from] ValueError),

    #[error(transparent)]
    Product(#[from] ProductError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LearnError>;
