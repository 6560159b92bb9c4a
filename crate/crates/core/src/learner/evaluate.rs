use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Result;
use crate::pomdp::HiddenState;
use crate::product::{Product, ProductAction};
use crate::value::{ValueError, ValueFunctions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: usize,
    pub discounted_reward: f64,
    /// Time steps at which an accepting product state was visited.
    pub accepting_visits: usize,
    /// Whether every window of consecutive time steps contained a visit.
    pub every_window: bool,
    /// Steps where no action was safe and the best allowed one was used.
    pub unsafe_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub horizon: usize,
    pub window: usize,
    pub runs: Vec<RunReport>,
    pub mean_discounted_reward: f64,
    /// Fraction of runs with a visit in every window.
    pub window_rate: f64,
}

impl EvaluationReport {
    pub const CSV_HEADER: &'static str =
        "run,discounted_reward,accepting_visits,every_window,unsafe_steps";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.run, r.discounted_reward, r.accepting_visits, r.every_window, r.unsafe_steps
            ));
        }
        out
    }
}

/// Simulates `runs` episodes of `horizon` base steps under the greedy safe
/// policy, each on its own random stream derived from `seed`.
///
/// Time step `t` covers the state reached after `t` base actions together
/// with any ε-moves taken there, so there are `horizon + 1` of them.
/// Windows are `window` consecutive time steps; a horizon shorter than the
/// window counts as one window.
pub fn evaluate_policy(
    product: &Product,
    values: &ValueFunctions,
    runs: usize,
    horizon: usize,
    window: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    let reports: Vec<RunReport> = if horizon == 0 {
        Vec::new()
    } else {
        (0..runs)
            .into_par_iter()
            .map(|run| simulate(product, values, run, horizon, window.max(1), seed))
            .collect::<Result<_>>()?
    };
    let n = reports.len().max(1) as f64;
    Ok(EvaluationReport {
        horizon,
        window,
        mean_discounted_reward: reports.iter().map(|r| r.discounted_reward).sum::<f64>() / n,
        window_rate: if reports.is_empty() {
            0.0
        } else {
            reports.iter().filter(|r| r.every_window).count() as f64 / n
        },
        runs: reports,
    })
}

fn simulate(
    product: &Product,
    values: &ValueFunctions,
    run: usize,
    horizon: usize,
    window: usize,
    seed: u64,
) -> Result<RunReport> {
    let model = product.model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    let mut ps = product.initial();
    let mut hidden = HiddenState::from_belief(&ps.belief, rng);
    let mut visits = vec![false; horizon + 1];
    let mut reward = 0.0;
    let mut discount = 1.0;
    let mut unsafe_steps = 0;
    let mut t = 0;
    let mut eps_run = 0;
    loop {
        visits[t] |= product.is_buchi(&ps);
        if t == horizon {
            break;
        }
        let mut act = match values.extract_policy(product, &ps) {
            Ok(a) => a,
            Err(ValueError::NoSafeAction { .. }) => {
                unsafe_steps += 1;
                values.policy_action(product, &ps)?.0
            }
            Err(e) => return Err(e.into()),
        };
        if act.is_epsilon() && eps_run >= product.n_automaton_states() {
            let base: Vec<ProductAction> =
                (0..model.n_actions()).map(ProductAction::Base).collect();
            act = values.reward.argmax_among(product, &ps, &base)?.0;
        }
        if let ProductAction::Base(a) = act {
            reward += discount * model.reward(hidden.current(), a);
            discount *= model.discount();
            t += 1;
            eps_run = 0;
        } else {
            eps_run += 1;
        }
        ps = product.sample(&ps, act, &mut hidden)?.0;
    }
    let every_window = if horizon < window {
        visits.iter().any(|&v| v)
    } else {
        visits.windows(window).all(|w| w.iter().any(|&v| v))
    };
    Ok(RunReport {
        run,
        discounted_reward: reward,
        accepting_visits: visits.iter().filter(|&&v| v).count(),
        every_window,
        unsafe_steps,
    })
}
