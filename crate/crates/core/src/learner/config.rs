use serde::{Deserialize, Serialize};

use super::{LearnError, Result};
use crate::value::{PruneMode, RewardMode, SAFE_THRESHOLD, WINNING_THRESHOLD};

/// How the exploiting branch picks among safe actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exploitation {
    /// Highest `Q_r`, first action on ties.
    Greedy,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    /// Probability of picking any available action instead of a safe one.
    pub epsilon: f64,
    pub gamma_b: f64,
    pub safe_threshold: f64,
    pub winning_threshold: f64,
    /// Transitions simulated from the chosen `((b, q), a)` per step.
    pub samples_per_update: usize,
    pub max_steps: u64,
    pub seed: u64,
    /// `point-based` prunes at the beliefs stored so far.
    pub prune: PruneMode,
    pub prune_cap: usize,
    pub exploitation: Exploitation,
    /// Fail with `NoSafeAction` instead of falling back to the best `Q_p`.
    pub strict_safety: bool,
    /// Chance of jumping to a random stored product belief after a step.
    pub restart_prob: f64,
    pub reward_mode: RewardMode,
    /// Largest value change between reports that counts as converged.
    pub tolerance: f64,
    /// Steps between metric rows and convergence checks.
    pub report_every: u64,
    /// No convergence is declared before this step.
    pub min_steps: u64,
    /// Steps between checkpoint snapshots.
    pub checkpoint_every: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            epsilon: 0.1,
            gamma_b: 0.99,
            safe_threshold: SAFE_THRESHOLD,
            winning_threshold: WINNING_THRESHOLD,
            samples_per_update: 1,
            max_steps: 100_000,
            seed: 0,
            prune: PruneMode::Lp,
            prune_cap: 200,
            exploitation: Exploitation::Greedy,
            strict_safety: false,
            restart_prob: 1.0,
            reward_mode: RewardMode::Constrained,
            tolerance: 1e-6,
            report_every: 1000,
            min_steps: 1000,
            checkpoint_every: 1000,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LearnError::InvalidConfig(m));
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad(format!("epsilon must lie in [0, 1), got {}", self.epsilon));
        }
        if !(self.gamma_b > 0.0 && self.gamma_b < 1.0) {
            return bad(format!("gamma_b must lie in (0, 1), got {}", self.gamma_b));
        }
        for (name, v) in [
            ("safe_threshold", self.safe_threshold),
            ("winning_threshold", self.winning_threshold),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.restart_prob) {
            return bad(format!(
                "restart_prob must lie in [0, 1], got {}",
                self.restart_prob
            ));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            ));
        }
        for (name, v) in [
            ("samples_per_update", self.samples_per_update as u64),
            ("prune_cap", self.prune_cap as u64),
            ("report_every", self.report_every),
            ("checkpoint_every", self.checkpoint_every),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        Ok(())
    }
}
