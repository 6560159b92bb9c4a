use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Result, ValueError};
use crate::logic::LabelSet;
use crate::pomdp::{Belief, BeliefKey};
use crate::product::{Product, ProductAction, ProductState};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Sweep or learning step that produced the vector; 0 for initial vectors.
    pub generation: u64,
    /// Belief at which the backup was taken, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<BeliefKey>,
}

/// One linear piece `θ` of a Q-function `Q((b, q), a) = max θ·b`.
///
/// A vector with `label: Some(l)` is only used at beliefs labeled `l`: the
/// automaton successor of `q` depends on the label, so a piece computed in
/// one label region says nothing about another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub theta: Vec<f64>,
    pub owner_q: usize,
    pub owner_a: ProductAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<LabelSet>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl AlphaVector {
    pub fn constant(n: usize, value: f64, q: usize, a: ProductAction) -> Self {
        AlphaVector {
            theta: vec![value; n],
            owner_q: q,
            owner_a: a,
            label: None,
            provenance: Provenance::default(),
        }
    }

    pub fn value(&self, b: &Belief) -> f64 {
        b.dot(&self.theta)
    }

    pub fn applies_to(&self, lbl: LabelSet) -> bool {
        self.label.is_none_or(|l| l == lbl)
    }
}

/// Index and value of the best vector at `b` among those applying to `lbl`.
/// Ties go to the earliest vector.
pub fn best_in(set: &[AlphaVector], b: &Belief, lbl: LabelSet) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in set.iter().enumerate() {
        if !v.applies_to(lbl) {
            continue;
        }
        let x = v.value(b);
        if best.is_none_or(|(_, y)| x > y) {
            best = Some((i, x));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SetEntry {
    q: usize,
    action: ProductAction,
    vectors: Vec<AlphaVector>,
}

/// The sets `Θ_{q,a}`; `Θ_q` is the union over the actions available at `q`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<SetEntry>", into = "Vec<SetEntry>")]
pub struct AlphaSetFamily {
    sets: BTreeMap<(usize, ProductAction), Vec<AlphaVector>>,
}

impl From<Vec<SetEntry>> for AlphaSetFamily {
    fn from(v: Vec<SetEntry>) -> Self {
        AlphaSetFamily {
            sets: v
                .into_iter()
                .map(|e| ((e.q, e.action), e.vectors))
                .collect(),
        }
    }
}

impl From<AlphaSetFamily> for Vec<SetEntry> {
    fn from(f: AlphaSetFamily) -> Self {
        f.sets
            .into_iter()
            .map(|((q, action), vectors)| SetEntry { q, action, vectors })
            .collect()
    }
}

impl AlphaSetFamily {
    /// One constant vector per `(q, a)` for every base action. ε-actions keep
    /// no vectors of their own: `Q((b, q), ε) = V((b, q'))` for the edge
    /// target `q'`.
    pub fn constant(product: &Product, value: f64) -> Self {
        let n = product.model().n_states();
        let mut sets = BTreeMap::new();
        for q in 0..product.n_automaton_states() {
            for a in 0..product.model().n_actions() {
                let a = ProductAction::Base(a);
                sets.insert((q, a), vec![AlphaVector::constant(n, value, q, a)]);
            }
        }
        AlphaSetFamily { sets }
    }

    pub fn set(&self, q: usize, a: ProductAction) -> &[AlphaVector] {
        self.sets.get(&(q, a)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn set_mut(&mut self, q: usize, a: ProductAction) -> &mut Vec<AlphaVector> {
        self.sets.entry((q, a)).or_default()
    }

    pub fn push(&mut self, v: AlphaVector) {
        self.set_mut(v.owner_q, v.owner_a).push(v);
    }

    /// Replaces the vector with the same owner, label and belief key, or
    /// appends when there is none.
    pub fn replace_or_push(&mut self, v: AlphaVector) {
        let set = self.set_mut(v.owner_q, v.owner_a);
        match set.iter_mut().find(|x| {
            x.label == v.label && x.provenance.key.is_some() && x.provenance.key == v.provenance.key
        }) {
            Some(slot) => *slot = v,
            None => set.push(v),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = (usize, ProductAction)> + '_ {
        self.sets.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, ProductAction), &[AlphaVector])> + '_ {
        self.sets.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub(crate) fn iter_mut(
        &mut self,
    ) -> impl Iterator<Item = (&(usize, ProductAction), &mut Vec<AlphaVector>)> {
        self.sets.iter_mut()
    }

    /// `Θ_q` in action order, then insertion order.
    pub fn theta_q(&self, q: usize) -> impl Iterator<Item = &AlphaVector> + '_ {
        self.sets
            .range((q, ProductAction::Base(0))..)
            .take_while(move |((q2, _), _)| *q2 == q)
            .flat_map(|(_, v)| v.iter())
    }

    /// Total number of vectors.
    pub fn size(&self) -> usize {
        self.sets.values().map(Vec::len).sum()
    }

    pub fn max_set_size(&self) -> usize {
        self.sets.values().map(Vec::len).max().unwrap_or(0)
    }

    /// `Q((b, q), a)`.
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
        match a {
            ProductAction::Base(_) => best_in(self.set(q, a), b, lbl)
                .map(|(_, v)| v)
                .ok_or(ValueError::EmptySet { q, action: a }),
            ProductAction::Epsilon(e) => {
                let to = epsilon_target(product, q, e)?;
                self.eval_v_labeled(product, to, b, lbl)
            }
        }
    }

    pub(crate) fn eval_v_labeled(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
        lbl: LabelSet,
    ) -> Result<f64> {
        let mut best: Option<f64> = None;
        for a in product.actions_at(q) {
            let v = self.eval_q_labeled(product, q, b, lbl, a)?;
            if best.is_none_or(|y| v > y) {
                best = Some(v);
            }
        }
        best.ok_or(ValueError::EmptySet {
            q,
            action: ProductAction::Base(0),
        })
    }

    /// `V((b, q)) = max_a Q((b, q), a)` with the first maximizing action.
    pub fn argmax(&self, product: &Product, ps: &ProductState) -> Result<(ProductAction, f64)> {
        self.argmax_among(product, ps, &product.actions_at(ps.q))
    }

    pub fn argmax_among(
        &self,
        product: &Product,
        ps: &ProductState,
        actions: &[ProductAction],
    ) -> Result<(ProductAction, f64)> {
        let lbl = product.label(&ps.belief);
        let mut best: Option<(ProductAction, f64)> = None;
        for &a in actions {
            let v = self.eval_q_labeled(product, ps.q, &ps.belief, lbl, a)?;
            if best.is_none_or(|(_, y)| v > y) {
                best = Some((a, v));
            }
        }
        best.ok_or(ValueError::EmptySet {
            q: ps.q,
            action: ProductAction::Base(0),
        })
    }

    pub fn eval_v(&self, product: &Product, ps: &ProductState) -> Result<f64> {
        self.argmax(product, ps).map(|(_, v)| v)
    }

    /// Best vector of `Θ_q` at `b`, restricted to the actions `actions(q)`.
    /// ε-actions are resolved through their target state, where the same
    /// restriction applies.
    pub(crate) fn best_vector(
        &self,
        product: &Product,
        q: usize,
        b: &Belief,
        lbl: LabelSet,
        actions: &dyn Fn(usize) -> Vec<ProductAction>,
    ) -> Option<(&AlphaVector, f64)> {
        let mut best: Option<(&AlphaVector, f64)> = None;
        for a in actions(q) {
            let found = match a {
                ProductAction::Base(_) => {
                    best_in(self.set(q, a), b, lbl).map(|(i, v)| (&self.set(q, a)[i], v))
                }
                ProductAction::Epsilon(e) => match epsilon_target(product, q, e) {
                    Ok(to) => self.best_vector(product, to, b, lbl, actions),
                    Err(_) => None,
                },
            };
            if let Some((v, x)) = found {
                if best.is_none_or(|(_, y)| x > y) {
                    best = Some((v, x));
                }
            }
        }
        best
    }
}

pub(crate) fn epsilon_target(product: &Product, q: usize, e: usize) -> Result<usize> {
    let aut = product.automaton();
    aut.epsilon_edges()
        .get(e)
        .filter(|edge| edge.from == q)
        .map(|edge| edge.to)
        .ok_or_else(|| {
            ValueError::Product(crate::product::ProductError::EpsilonUnavailable {
                edge: e,
                state: aut.state_name(q).to_string(),
            })
        })
}
