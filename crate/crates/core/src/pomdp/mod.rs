//! Finite POMDP models, exact Bayesian belief filtering and the belief-MDP
//! quantities built on top of it.
//!
//! A model is stored densely: transitions as `T[s][a][s']`, the sensor as
//! `Ω[s'][o]` (observations depend on the state that was entered only), and
//! rewards as `r[s][a]`. All actions are enabled in every state.

mod belief;
mod io;
pub(crate) mod model;
mod sim;

pub use belief::{Belief, BeliefKey, BELIEF_TOL, KEY_SCALE};
pub use io::PomdpFile;
pub use model::{Pomdp, Successor, Violation, ViolationKind};
pub use sim::{sample_index, HiddenState, RngSnapshot};

use thiserror::Error;

/// Observations whose likelihood is at or below this value are treated as
/// impossible under the current belief.
pub const LIKELIHOOD_FLOOR: f64 = 1e-12;

/// Tolerance used by [`Pomdp::validate`] for row sums.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PomdpError {
    #[error("observation `{observation}` has likelihood {likelihood:e} after action `{action}`")]
    ZeroLikelihoodObservation {
        action: String,
        observation: String,
        likelihood: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("model format error: {0}")]
    Format(String),

    #[error("index {index} out of range for {what} (len {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PomdpError>;
