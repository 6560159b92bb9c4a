use serde::{Deserialize, Serialize};

use super::{epsilon_target, AlphaSetFamily, Result, ValueError};
use crate::logic::LabelSet;
use crate::pomdp::Belief;
use crate::product::{Product, ProductAction, ProductState};

/// Actions with `Q_p` at or above this are safe.
pub const SAFE_THRESHOLD: f64 = 1.0 - 1e-6;

/// Surrogate values at or above this mark the almost-sure winning region.
pub const WINNING_THRESHOLD: f64 = 1.0 - 1e-6;

/// With no safe action, every action this close to the best `Q_p` is allowed.
pub const FALLBACK_TOL: f64 = 1e-6;

/// The satisfaction-probability function `Q_p`, held as a Büchi surrogate
/// plus reachability of the region where the surrogate is (nearly) 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbFamily {
    pub surrogate: AlphaSetFamily,
    pub reach: AlphaSetFamily,
    pub winning_threshold: f64,
}

impl ProbFamily {
    /// Zero everywhere.
    pub fn initial(product: &Product) -> Self {
        ProbFamily {
            surrogate: AlphaSetFamily::constant(product, 0.0),
            reach: AlphaSetFamily::constant(product, 0.0),
            winning_threshold: WINNING_THRESHOLD,
        }
    }

    /// One everywhere; exact when every automaton state is accepting.
    pub fn certain(product: &Product) -> Self {
        ProbFamily {
            surrogate: AlphaSetFamily::constant(product, 1.0),
            reach: AlphaSetFamily::constant(product, 1.0),
            winning_threshold: WINNING_THRESHOLD,
        }
    }

    /// Whether `(b, q)` lies in the almost-sure winning region.
    pub fn winning(&self, product: &Product, ps: &ProductState) -> Result<bool> {
        Ok(self.surrogate.eval_v(product, ps)? >= self.winning_threshold)
    }

    /// `Q_p((b, q), a)`.
    pub fn eval_q(&self, product: &Product, ps: &ProductState, a: ProductAction) -> Result<f64> {
        let lbl = product.label(&ps.belief);
        self.eval_q_labeled(product, ps.q, &ps.belief, lbl, a)
    }

    pub(crate) fn eval_q_labeled(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
        lbl: LabelSet,
        a: ProductAction,
    ) -> Result<f64> {
        prob_q(
            &self.surrogate,
            &self.reach,
            self.winning_threshold,
            product,
            q,
            b,
            lbl,
            a,
        )
    }

    /// `max_a Q_p`, without the reporting clamp on accepting states.
    pub(crate) fn value_labeled(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
        lbl: LabelSet,
    ) -> Result<f64> {
        prob_v(
            &self.surrogate,
            &self.reach,
            self.winning_threshold,
            product,
            q,
            b,
            lbl,
        )
    }

    /// `V_p((b, q))`, reported as exactly 1 on accepting automaton states.
    pub fn eval_v(&self, product: &Product, ps: &ProductState) -> Result<f64> {
        if product.automaton().is_accepting(ps.q) {
            return Ok(1.0);
        }
        self.value_labeled(product, ps.q, &ps.belief, product.label(&ps.belief))
    }

    /// Safe actions, or if there are none, the actions with the best `Q_p`.
    pub(crate) fn allowed_labeled(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
        lbl: LabelSet,
        threshold: f64,
    ) -> Result<Vec<ProductAction>> {
        let acts = product.actions_at(q);
        let mut qp = Vec::with_capacity(acts.len());
        for &a in &acts {
            qp.push(self.eval_q_labeled(product, q, b, lbl, a)?);
        }
        let safe: Vec<ProductAction> = acts
            .iter()
            .zip(&qp)
            .filter(|(_, &v)| v >= threshold)
            .map(|(a, _)| *a)
            .collect();
        if !safe.is_empty() {
            return Ok(safe);
        }
        let best = qp.iter().copied().fold(f64::MIN, f64::max);
        Ok(acts
            .iter()
            .zip(&qp)
            .filter(|(_, &v)| v >= best - FALLBACK_TOL)
            .map(|(a, _)| *a)
            .collect())
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn prob_q(
    surrogate: &AlphaSetFamily,
    reach: &AlphaSetFamily,
    threshold: f64,
    product: &Product,
    q: usize,
    b: &Belief,
    lbl: LabelSet,
    a: ProductAction,
) -> Result<f64> {
    match a {
        ProductAction::Epsilon(e) => {
            let to = epsilon_target(product, q, e)?;
            prob_v(surrogate, reach, threshold, product, to, b, lbl)
        }
        ProductAction::Base(_) => {
            if surrogate.eval_q_labeled(product, q, b, lbl, a)? >= threshold {
                Ok(1.0)
            } else {
                Ok(reach.eval_q_labeled(product, q, b, lbl, a)?.clamp(0.0, 1.0))
            }
        }
    }
}

pub(crate) fn prob_v(
    surrogate: &AlphaSetFamily,
    reach: &AlphaSetFamily,
    threshold: f64,
    product: &Product,
    q: usize,
    b: &Belief,
    lbl: LabelSet,
) -> Result<f64> {
    let mut best = 0.0f64;
    for a in product.actions_at(q) {
        best = best.max(prob_q(surrogate, reach, threshold, product, q, b, lbl, a)?);
    }
    Ok(best)
}

/// Actions with `Q_p ≥ threshold`, in action order. May be empty.
pub fn safe_actions(
    fam_p: &ProbFamily,
    product: &Product,
    ps: &ProductState,
    threshold: f64,
) -> Result<Vec<ProductAction>> {
    let lbl = product.label(&ps.belief);
    let mut out = Vec::new();
    for a in product.actions_at(ps.q) {
        if fam_p.eval_q_labeled(product, ps.q, &ps.belief, lbl, a)? >= threshold {
            out.push(a);
        }
    }
    Ok(out)
}

/// Relative `Q_r` margin within which an ε-move is preferred.
pub const EPSILON_TIE_TOL: f64 = 1e-6;

/// Reward and probability families with the safety settings that tie them
/// together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunctions {
    pub reward: AlphaSetFamily,
    pub prob: ProbFamily,
    pub safe_threshold: f64,
    /// When set, `V_r` maximizes over allowed actions only.
    pub constrained: bool,
}

impl ValueFunctions {
    pub fn q_p(&self, product: &Product, ps: &ProductState, a: ProductAction) -> Result<f64> {
        self.prob.eval_q(product, ps, a)
    }

    pub fn value_p(&self, product: &Product, ps: &ProductState) -> Result<f64> {
        self.prob.eval_v(product, ps)
    }

    pub fn safe_actions(&self, product: &Product, ps: &ProductState) -> Result<Vec<ProductAction>> {
        safe_actions(&self.prob, product, ps, self.safe_threshold)
    }

    /// Actions `V_r` maximizes over: the safe set (or the best-`Q_p`
    /// fallback) when constrained, everything otherwise.
    pub fn allowed_actions(
        &self,
        product: &Product,
        ps: &ProductState,
    ) -> Result<Vec<ProductAction>> {
        let lbl = product.label(&ps.belief);
        self.allowed_labeled(product, ps.q, &ps.belief, lbl)
    }

    pub(crate) fn allowed_labeled(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
        lbl: LabelSet,
    ) -> Result<Vec<ProductAction>> {
        if self.constrained {
            self.prob
                .allowed_labeled(product, q, b, lbl, self.safe_threshold)
        } else {
            Ok(product.actions_at(q))
        }
    }

    pub fn q_r(&self, product: &Product, ps: &ProductState, a: ProductAction) -> Result<f64> {
        let lbl = product.label(&ps.belief);
        self.q_r_labeled(product, ps.q, &ps.belief, lbl, a)
    }

    fn q_r_labeled(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
        lbl: LabelSet,
        a: ProductAction,
    ) -> Result<f64> {
        match a {
            ProductAction::Base(_) => self.reward.eval_q_labeled(product, q, b, lbl, a),
            ProductAction::Epsilon(e) => {
                let to = epsilon_target(product, q, e)?;
                self.best_among(
                    product,
                    to,
                    b,
                    lbl,
                    &self.allowed_labeled(product, to, b, lbl)?,
                )
                .map(|(_, v)| v)
            }
        }
    }

    fn best_among(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
        lbl: LabelSet,
        actions: &[ProductAction],
    ) -> Result<(ProductAction, f64)> {
        let mut best: Option<(ProductAction, f64)> = None;
        for &a in actions {
            let v = self.q_r_labeled(product, q, b, lbl, a)?;
            if best.is_none_or(|(_, y)| v > y) {
                best = Some((a, v));
            }
        }
        best.ok_or(ValueError::EmptySet {
            q,
            action: ProductAction::Base(0),
        })
    }

    /// `V_r((b, q))` over the allowed actions.
    pub fn value_r(&self, product: &Product, ps: &ProductState) -> Result<f64> {
        self.policy_action(product, ps).map(|(_, v)| v)
    }

    /// Greedy `Q_r` action over the safe set; fails when it is empty.
    pub fn extract_policy(&self, product: &Product, ps: &ProductState) -> Result<ProductAction> {
        let safe = self.safe_actions(product, ps)?;
        if safe.is_empty() {
            return Err(ValueError::NoSafeAction {
                state: ps.to_string(),
            });
        }
        let lbl = product.label(&ps.belief);
        self.choose(product, ps.q, &ps.belief, lbl, &safe)
            .map(|(a, _)| a)
    }

    /// Greedy `Q_r` action over the allowed set, with its value.
    pub fn policy_action(
        &self,
        product: &Product,
        ps: &ProductState,
    ) -> Result<(ProductAction, f64)> {
        let lbl = product.label(&ps.belief);
        let allowed = self.allowed_labeled(product, ps.q, &ps.belief, lbl)?;
        self.choose(product, ps.q, &ps.belief, lbl, &allowed)
    }

    /// Best `Q_r` among `actions`, except that an ε-move within
    /// [`EPSILON_TIE_TOL`] of the best is taken instead. Putting off a jump
    /// that costs nothing never helps acceptance, and always putting it off
    /// never accepts.
    fn choose(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
        lbl: LabelSet,
        actions: &[ProductAction],
    ) -> Result<(ProductAction, f64)> {
        let (best, v) = self.best_among(product, q, b, lbl, actions)?;
        if best.is_epsilon() {
            return Ok((best, v));
        }
        for &a in actions.iter().filter(|a| a.is_epsilon()) {
            if self.q_r_labeled(product, q, b, lbl, a)? >= v - EPSILON_TIE_TOL * v.abs().max(1.0) {
                return Ok((a, v));
            }
        }
        Ok((best, v))
    }
}
