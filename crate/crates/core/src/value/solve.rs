use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::prob_v;
use super::{
    backup_with, prune_lp_labeled, prune_pointbased_labeled, witness_labels, AlphaSetFamily,
    AlphaVector, Layer, ProbFamily, ReachLayer, Result, RewardLayer, SurrogateLayer, ValueError,
    ValueFunctions, WitnessSet, SAFE_THRESHOLD, WINNING_THRESHOLD,
};
use crate::logic::LabelSet;
use crate::pomdp::Belief;
use crate::product::{Product, ProductAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneMode {
    /// Exact LP pruning, switching to point-based above `prune_cap`.
    Lp,
    /// Point-based pruning at the belief set only.
    PointBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    /// `V_r` maximizes over allowed actions only.
    Constrained,
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub gamma_b: f64,
    pub safe_threshold: f64,
    pub winning_threshold: f64,
    pub prune: PruneMode,
    pub prune_cap: usize,
    pub reward_mode: RewardMode,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tolerance: 1e-6,
            max_sweeps: 10_000,
            gamma_b: 0.99,
            safe_threshold: SAFE_THRESHOLD,
            winning_threshold: WINNING_THRESHOLD,
            prune: PruneMode::Lp,
            prune_cap: 200,
            reward_mode: RewardMode::Constrained,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ValueError::InvalidConfig(m));
        if !(self.tolerance > 0.0) {
            return bad(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            ));
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be at least 1".into());
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
        if self.prune_cap == 0 {
            return bad("prune_cap must be at least 1".into());
        }
        Ok(())
    }

    /// Stopping tolerance of the surrogate phase. The winning test compares
    /// against `winning_threshold`, so the surrogate has to settle well below
    /// that margin.
    pub fn surrogate_tolerance(&self) -> f64 {
        self.tolerance
            .min(1e-3 * (1.0 - self.winning_threshold).max(1e-9) * (1.0 - self.gamma_b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: String,
    pub sweeps: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub phases: Vec<PhaseReport>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.phases.iter().all(|p| p.converged)
    }

    pub fn sweeps(&self) -> usize {
        self.phases.iter().map(|p| p.sweeps).sum()
    }

    /// Residual of the last phase run.
    pub fn residual(&self) -> f64 {
        self.phases.last().map_or(0.0, |p| p.residual)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub values: ValueFunctions,
    pub report: SolveReport,
}

struct Phase<'a> {
    name: &'static str,
    product: &'a Product,
    witnesses: &'a WitnessSet,
    labels: &'a [LabelSet],
    config: &'a SolveConfig,
    tolerance: f64,
}

impl Phase<'_> {
    fn run<B, V>(&self, fam: &mut AlphaSetFamily, backup: B, value: V) -> Result<PhaseReport>
    where
        B: Fn(&AlphaSetFamily, usize, ProductAction, &Belief, u64) -> Result<AlphaVector> + Sync,
        V: Fn(&AlphaSetFamily, usize, &Belief, LabelSet) -> Result<f64> + Sync,
    {
        let product = self.product;
        let nq = product.n_automaton_states();
        let na = product.model().n_actions();
        let beliefs = self.witnesses.beliefs();
        let tasks: Vec<(usize, usize, usize)> = (0..beliefs.len())
            .flat_map(|i| (0..nq).flat_map(move |q| (0..na).map(move |a| (i, q, a))))
            .collect();
        let points: Vec<(usize, usize)> = (0..beliefs.len())
            .flat_map(|i| (0..nq).map(move |q| (i, q)))
            .collect();
        let values = |fam: &AlphaSetFamily| -> Result<Vec<f64>> {
            points
                .par_iter()
                .map(|&(i, q)| value(fam, q, &beliefs[i], self.labels[i]))
                .collect()
        };

        let mut current = values(fam)?;
        let mut residual = f64::INFINITY;
        for sweep in 1..=self.config.max_sweeps {
            let snapshot = &*fam;
            let fresh: Vec<AlphaVector> = tasks
                .par_iter()
                .map(|&(i, q, a)| {
                    backup(
                        snapshot,
                        q,
                        ProductAction::Base(a),
                        &beliefs[i],
                        sweep as u64,
                    )
                })
                .collect::<Result<_>>()?;
            for v in fresh {
                let set = fam.set_mut(v.owner_q, v.owner_a);
                if !set.iter().any(|x| x.label == v.label && x.theta == v.theta) {
                    set.push(v);
                }
            }
            let mut sets: Vec<&mut Vec<AlphaVector>> = fam.iter_mut().map(|(_, s)| s).collect();
            sets.par_iter_mut().for_each(|set| {
                **set = if self.config.prune == PruneMode::PointBased
                    || set.len() > self.config.prune_cap
                {
                    prune_pointbased_labeled(set, self.witnesses, self.labels)
                } else {
                    prune_lp_labeled(set)
                };
            });
            let next = values(fam)?;
            residual = current
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            current = next;
            debug!(
                "{} sweep {sweep}: residual {residual:e}, {} vectors",
                self.name,
                fam.size()
            );
            if residual < self.tolerance {
                info!("{} phase converged after {sweep} sweeps", self.name);
                return Ok(PhaseReport {
                    phase: self.name.into(),
                    sweeps: sweep,
                    residual,
                    converged: true,
                });
            }
        }
        Ok(PhaseReport {
            phase: self.name.into(),
            sweeps: self.config.max_sweeps,
            residual,
            converged: false,
        })
    }
}

/// Point-based value iteration over `beliefs` for every automaton state.
///
/// Runs three phases in order: the Büchi surrogate, reachability of its
/// winning region, and the reward family (restricted to allowed actions in
/// constrained mode). Each phase sweeps until the largest value change on
/// the belief set falls below the tolerance.
pub fn solve_pbvi(product: &Product, beliefs: &[Belief], config: &SolveConfig) -> Result<Solution> {
    config.validate()?;
    if beliefs.is_empty() {
        return Err(ValueError::InvalidConfig("belief set is empty".into()));
    }
    let n = product.model().n_states();
    if let Some(b) = beliefs.iter().find(|b| b.dim() != n) {
        return Err(ValueError::InvalidConfig(format!(
            "belief of dimension {} for a model with {n} states",
            b.dim()
        )));
    }
    let witnesses = WitnessSet::new(beliefs.iter().cloned());
    let labels = witness_labels(&witnesses, product.labeler());
    let phase = |name, tolerance| Phase {
        name,
        product,
        witnesses: &witnesses,
        labels: &labels,
        config,
        tolerance,
    };

    let model = product.model();
    let floor = model.min_reward() / (1.0 - model.discount());
    let mut values = ValueFunctions {
        reward: AlphaSetFamily::constant(product, floor),
        prob: ProbFamily::initial(product),
        safe_threshold: config.safe_threshold,
        constrained: config.reward_mode == RewardMode::Constrained,
    };
    values.prob.winning_threshold = config.winning_threshold;
    let mut report = SolveReport::default();
    let fail = |values: ValueFunctions, report: SolveReport| {
        let last = report.phases.last().unwrap();
        ValueError::NonConvergence {
            phase: last.phase.clone(),
            sweeps: last.sweeps,
            residual: last.residual,
            partial: Box::new(Solution {
                values: values.clone(),
                report: report.clone(),
            }),
        }
    };

    let all_accepting =
        (0..product.n_automaton_states()).all(|q| product.automaton().is_accepting(q));
    if all_accepting {
        values.prob = ProbFamily {
            winning_threshold: config.winning_threshold,
            ..ProbFamily::certain(product)
        };
    } else {
        let mut surrogate = std::mem::take(&mut values.prob.surrogate);
        let r = phase("surrogate", config.surrogate_tolerance()).run(
            &mut surrogate,
            |fam, q, a, b, g| {
                let layer = SurrogateLayer {
                    fam,
                    gamma_b: config.gamma_b,
                };
                backup_with(&layer, product, q, a, b, g)
            },
            |fam, q, b, lbl| fam.eval_v_labeled(product, q, b, lbl),
        )?;
        values.prob.surrogate = surrogate;
        report.phases.push(r);
        if !report.converged() {
            return Err(fail(values, report));
        }

        let mut reach = std::mem::take(&mut values.prob.reach);
        let surrogate = &values.prob.surrogate;
        let thr = config.winning_threshold;
        let r = phase("reach", config.tolerance).run(
            &mut reach,
            |fam, q, a, b, g| {
                let layer = ReachLayer {
                    reach: fam,
                    surrogate,
                    winning_threshold: thr,
                };
                backup_with(&layer, product, q, a, b, g)
            },
            |fam, q, b, lbl| prob_v(surrogate, fam, thr, product, q, b, lbl),
        )?;
        values.prob.reach = reach;
        report.phases.push(r);
        if !report.converged() {
            return Err(fail(values, report));
        }
    }

    let mut reward = std::mem::take(&mut values.reward);
    let constrained = values.constrained;
    let prob = &values.prob;
    let allowed = constrained.then_some((prob, config.safe_threshold));
    let r = phase("reward", config.tolerance).run(
        &mut reward,
        |fam, q, a, b, g| {
            backup_with(
                &RewardLayer {
                    fam,
                    floor,
                    allowed,
                },
                product,
                q,
                a,
                b,
                g,
            )
        },
        |fam, q, b, _| {
            let layer = RewardLayer {
                fam,
                floor,
                allowed,
            };
            Ok(b.dot(&layer.continuation(product, q, b).0))
        },
    )?;
    values.reward = reward;
    report.phases.push(r);
    if !report.converged() {
        return Err(fail(values, report));
    }
    Ok(Solution { values, report })
}
