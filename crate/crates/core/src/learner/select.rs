use rand::Rng;

use super::{Choice, Exploitation, LearnError, Result};
use crate::product::ProductAction;

/// ε-greedy selection restricted to the safe set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionChooser {
    pub epsilon: f64,
    pub exploitation: Exploitation,
    pub strict: bool,
}

impl ActionChooser {
    /// Every call draws one uniform number for the explore decision and, when
    /// a uniform pick is needed, one index.
    ///
    /// `fallback` is used when `safe` is empty; `score` ranks candidates for
    /// greedy exploitation.
    pub fn choose<R: Rng + ?Sized>(
        &self,
        safe: &[ProductAction],
        fallback: &[ProductAction],
        all: &[ProductAction],
        score: &mut dyn FnMut(ProductAction) -> Result<f64>,
        rng: &mut R,
    ) -> Result<(ProductAction, Choice)> {
        if all.is_empty() {
            return Err(LearnError::InvalidConfig("no available actions".into()));
        }
        let u: f64 = rng.gen();
        if u < self.epsilon {
            return Ok((all[rng.gen_range(0..all.len())], Choice::Explore));
        }
        let (pool, choice) = if !safe.is_empty() {
            (safe, Choice::Exploit)
        } else if self.strict {
            return Err(LearnError::NoSafeAction {
                state: String::new(),
            });
        } else if !fallback.is_empty() {
            (fallback, Choice::Fallback)
        } else {
            (all, Choice::Fallback)
        };
        let a = match self.exploitation {
            Exploitation::Uniform => pool[rng.gen_range(0..pool.len())],
            Exploitation::Greedy => {
                let mut best: Option<(ProductAction, f64)> = None;
                for &a in pool {
                    let v = score(a)?;
                    if best.is_none_or(|(_, y)| v > y) {
                        best = Some((a, v));
                    }
                }
                best.unwrap().0
            }
        };
        Ok((a, choice))
    }
}

/// With probability `1 - ε` a uniform safe action, otherwise a uniform
/// action from `all`. An empty safe set fails in strict mode and falls back
/// to `all` otherwise.
pub fn choose_action<R: Rng + ?Sized>(
    safe: &[ProductAction],
    all: &[ProductAction],
    epsilon: f64,
    strict: bool,
    rng: &mut R,
) -> Result<ProductAction> {
    let chooser = ActionChooser {
        epsilon,
        exploitation: Exploitation::Uniform,
        strict,
    };
    chooser
        .choose(safe, &[], all, &mut |_| Ok(0.0), rng)
        .map(|(a, _)| a)
}
