//! The run configuration file: solver, learner, belief-set and evaluation
//! settings in one TOML document. Every section and key is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use iltl_pomdp::learner::LearnerConfig;
use iltl_pomdp::pomdp::{Belief, Pomdp};
use iltl_pomdp::value::{
    grid_beliefs, random_beliefs, reachable_beliefs, vertex_beliefs, SolveConfig,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub solve: SolveConfig,
    pub beliefs: BeliefConfig,
    pub learn: LearnerConfig,
    pub evaluate: EvaluateConfig,
}

/// Belief points used by `solve`. Vertices are always included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeliefConfig {
    /// Resolution of the regular simplex grid, 0 for none.
    pub grid: usize,
    pub reachable_depth: usize,
    pub reachable_limit: usize,
    pub random: usize,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        BeliefConfig {
            grid: 4,
            reachable_depth: 8,
            reachable_limit: 200,
            random: 0,
        }
    }
}

impl BeliefConfig {
    pub fn points(&self, model: &Pomdp, seed: u64) -> Vec<Belief> {
        let n = model.n_states();
        let mut out = vertex_beliefs(n);
        if self.grid > 0 {
            out.extend(grid_beliefs(n, self.grid));
        }
        if self.reachable_limit > 0 {
            out.extend(reachable_beliefs(
                model,
                &model.initial(),
                self.reachable_depth,
                self.reachable_limit,
            ));
        }
        if self.random > 0 {
            out.extend(random_beliefs(n, self.random, seed));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub runs: usize,
    pub horizon: usize,
    /// Window length for the recurrence check.
    pub window: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            runs: 100,
            horizon: 100,
            window: 50,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path.display(), e))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::input(path.display(), e))?;
        config.solve.validate()?;
        config.learn.validate()?;
        Ok(config)
    }
}
