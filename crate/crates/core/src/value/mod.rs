//! Piecewise-linear convex value functions over the product belief MDP.
//!
//! Every Q-function is a family of α-vector sets `Θ_{q,a}`, with
//! `Q((b, q), a) = max_{θ ∈ Θ_{q,a}} θ·b`. Three families are kept:
//!
//! * the reward family for `Q_r`, discounted by the model discount;
//! * a Büchi surrogate: accepting states pay `1 - γ_B` and discount by `γ_B`,
//!   all other moves are free and undiscounted. Its value is 1 exactly on
//!   the states that satisfy the constraint almost surely;
//! * a reachability family for the probability of entering that winning
//!   region, which gives `Q_p`.
//!
//! Backups are point-based. A vector backed up at a belief whose automaton
//! move depends on the label is tagged with that label and only used at
//! beliefs carrying the same label.

mod alpha;
mod backup;
mod beliefs;
mod export;
mod family;
mod prune;
mod solve;

pub use alpha::{best_in, AlphaSetFamily, AlphaVector, Provenance};
pub use backup::{backup_empirical, backup_empirical_literal, backup_exact, backup_p};
pub use beliefs::{grid_beliefs, random_beliefs, reachable_beliefs, vertex_beliefs};
pub use export::{PolicyEntry, PolicyFile, ValueFile};
pub use family::{
    safe_actions, ProbFamily, ValueFunctions, EPSILON_TIE_TOL, FALLBACK_TOL, SAFE_THRESHOLD,
    WINNING_THRESHOLD,
};
pub use prune::{prune_lp, prune_lp_indices, prune_pointbased, WitnessSet, LP_MARGIN};
pub use solve::{
    solve_pbvi, PhaseReport, PruneMode, RewardMode, Solution, SolveConfig, SolveReport,
};

pub(crate) use alpha::epsilon_target;
pub(crate) use backup::{
    backup_with, empirical_with, Layer, ReachLayer, RewardLayer, SurrogateLayer,
};
pub(crate) use prune::{prune_lp_labeled, prune_pointbased_labeled, witness_labels};

use thiserror::Error;

use crate::pomdp::PomdpError;
use crate::product::{ProductAction, ProductError};

#[derive(Debug, Error)]
pub enum ValueError {
    #[error("no α-vector applies at automaton state {q} for action {action:?}")]
    EmptySet { q: usize, action: ProductAction },

    #[error("inconsistent samples: {0}")]
    InconsistentSamples(String),

    #[error("no safe action at {state}")]
    NoSafeAction { state: String },

    #[error("{phase} phase did not converge after {sweeps} sweeps (residual {residual:e})")]
    NonConvergence {
        phase: String,
        sweeps: usize,
        residual: f64,
        partial: Box<Solution>,
    },

    #[error(transparent)]
    Product(#[from] ProductError),

    #[error(transparent)]
    Pomdp(#[from] PomdpError),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("value file format error: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ValueError>;
