use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LearnError, Result};
use crate::pomdp::{Belief, BeliefKey};
use crate::product::{Product, ProductAction, ProductState};

/// How the action of a step was selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    /// Uniform over all available actions.
    Explore,
    /// From the safe set (or from everything when unconstrained).
    Exploit,
    /// The safe set was empty; picked among the best-`Q_p` actions.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub step: u64,
    pub source: ProductState,
    pub action: ProductAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<usize>,
    pub successor: ProductState,
    pub choice: Choice,
    /// Whether the action was in the safe set when it was chosen.
    pub safe: bool,
}

/// Product point: quantized belief and automaton state.
pub type PointKey = (BeliefKey, usize);

/// The episode store `Ξ`: every sampled transition, indexed by source point.
#[derive(Debug, Clone, Default)]
pub struct EpisodeStore {
    records: Vec<TransitionRecord>,
    index: BTreeMap<PointKey, Vec<usize>>,
    points: Vec<PointKey>,
    known: BTreeMap<PointKey, usize>,
    reps: BTreeMap<BeliefKey, Belief>,
}

impl EpisodeStore {
    /// A store whose only point is `start`.
    pub fn new(start: &ProductState) -> Self {
        let mut s = EpisodeStore::default();
        s.add_point(start);
        s
    }

    fn add_point(&mut self, ps: &ProductState) {
        let key = ps.belief.key();
        self.reps
            .entry(key.clone())
            .or_insert_with(|| ps.belief.clone());
        let pk = (key, ps.q);
        if !self.known.contains_key(&pk) {
            self.known.insert(pk.clone(), self.points.len());
            self.points.push(pk);
        }
    }

    pub fn records(&self) -> &[TransitionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Positions of the records leaving `(key, q)`.
    pub fn from_point(&self, key: &BeliefKey, q: usize) -> &[usize] {
        self.index
            .get(&(key.clone(), q))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Every product point seen as a source or successor, in order of first
    /// appearance.
    pub fn points(&self) -> &[PointKey] {
        &self.points
    }

    /// The first belief stored under `key`.
    pub fn representative(&self, key: &BeliefKey) -> Option<&Belief> {
        self.reps.get(key)
    }

    /// The point `(b, q)` with `b` replaced by its representative.
    pub fn canonical(&self, ps: &ProductState) -> ProductState {
        match self.reps.get(&ps.belief.key()) {
            Some(b) => ProductState::new(b.clone(), ps.q),
            None => ps.clone(),
        }
    }

    pub fn point_state(&self, i: usize) -> ProductState {
        let (key, q) = &self.points[i];
        ProductState::new(self.reps[key].clone(), *q)
    }

    fn push(&mut self, rec: TransitionRecord) {
        self.add_point(&rec.source);
        self.add_point(&rec.successor);
        let pos = self.records.len();
        self.index
            .entry((rec.source.belief.key(), rec.source.q))
            .or_default()
            .push(pos);
        self.records.push(rec);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessorCount {
    pub count: u64,
    /// The first successor belief seen under this key.
    pub belief: Belief,
}

/// Successor counts per `(belief key, action)` for base actions. ε-moves
/// leave the belief unchanged and are not counted.
#[derive(Debug, Clone, Default)]
pub struct EmpiricalModel {
    counts: BTreeMap<(BeliefKey, usize), BTreeMap<BeliefKey, SuccessorCount>>,
    totals: BTreeMap<(BeliefKey, usize), u64>,
}

impl EmpiricalModel {
    pub fn add(&mut self, from: &Belief, action: usize, to: &Belief) {
        let k = (from.key(), action);
        self.counts
            .entry(k.clone())
            .or_default()
            .entry(to.key())
            .or_insert_with(|| SuccessorCount {
                count: 0,
                belief: to.clone(),
            })
            .count += 1;
        *self.totals.entry(k).or_default() += 1;
    }

    pub fn total(&self, key: &BeliefKey, action: usize) -> u64 {
        self.totals
            .get(&(key.clone(), action))
            .copied()
            .unwrap_or(0)
    }

    pub fn count(&self, key: &BeliefKey, action: usize, successor: &BeliefKey) -> u64 {
        self.counts
            .get(&(key.clone(), action))
            .and_then(|m| m.get(successor))
            .map_or(0, |c| c.count)
    }

    pub fn successors(
        &self,
        key: &BeliefKey,
        action: usize,
    ) -> impl Iterator<Item = (&BeliefKey, &SuccessorCount)> {
        self.counts
            .get(&(key.clone(), action))
            .into_iter()
            .flatten()
    }

    /// `T̂(b, a, b') = count / total`, in key order.
    pub fn estimate(&self, key: &BeliefKey, action: usize) -> Vec<(BeliefKey, f64)> {
        let total = self.total(key, action) as f64;
        self.successors(key, action)
            .map(|(k, c)| (k.clone(), c.count as f64 / total))
            .collect()
    }

    /// Number of `(belief key, action)` pairs with samples.
    pub fn len(&self) -> usize {
        self.totals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.is_empty()
    }
}

/// Appends `rec` to the store and counts it. The successor must be what the
/// product produces from the source under the recorded action and
/// observation.
pub fn record_transition(
    store: &mut EpisodeStore,
    empirical: &mut EmpiricalModel,
    product: &Product,
    rec: TransitionRecord,
) -> Result<()> {
    let replay = product
        .step(&rec.source, rec.action, rec.observation)
        .map_err(|e| LearnError::InconsistentRecord(format!("step {}: {e}", rec.step)))?;
    if replay != rec.successor {
        return Err(LearnError::InconsistentRecord(format!(
            "step {}: {} under {} gives {replay}, record says {}",
            rec.step,
            rec.source,
            product.action_name(rec.action),
            rec.successor
        )));
    }
    if let ProductAction::Base(a) = rec.action {
        empirical.add(&rec.source.belief, a, &rec.successor.belief);
    }
    store.push(rec);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::fixtures::trap_pair;

    fn rec(p: &Product, step: u64, src: &ProductState, a: usize, o: usize) -> TransitionRecord {
        TransitionRecord {
            step,
            source: src.clone(),
            action: ProductAction::Base(a),
            observation: Some(o),
            successor: p.step(src, ProductAction::Base(a), Some(o)).unwrap(),
            choice: Choice::Exploit,
            safe: true,
        }
    }

    #[test]
    fn first_record_gets_probability_one() {
        let p = trap_pair();
        let start = p.initial();
        let mut store = EpisodeStore::new(&start);
        let mut emp = EmpiricalModel::default();
        record_transition(&mut store, &mut emp, &p, rec(&p, 1, &start, 1, 1)).unwrap();
        let key = start.belief.key();
        assert_eq!(
            emp.estimate(&key, 1),
            vec![(Belief::point(2, 1).key(), 1.0)]
        );
        assert_eq!(store.from_point(&key, 0), &[0]);
        // start, then the successor
        assert_eq!(store.points().len(), 2);
    }

    #[test]
    fn two_successors_split_evenly() {
        let p = trap_pair();
        let start = p.initial();
        let mut store = EpisodeStore::new(&start);
        let mut emp = EmpiricalModel::default();
        record_transition(&mut store, &mut emp, &p, rec(&p, 1, &start, 1, 1)).unwrap();
        record_transition(&mut store, &mut emp, &p, rec(&p, 2, &start, 1, 0)).unwrap();
        let est = emp.estimate(&start.belief.key(), 1);
        assert_eq!(est.len(), 2);
        assert!(est.iter().all(|(_, x)| *x == 0.5));
        assert_eq!(emp.total(&start.belief.key(), 1), 2);
    }

    #[test]
    fn inconsistent_records_are_rejected() {
        let p = trap_pair();
        let start = p.initial();
        let mut store = EpisodeStore::new(&start);
        let mut emp = EmpiricalModel::default();
        let mut r = rec(&p, 1, &start, 0, 1);
        r.successor.q = 0;
        assert!(matches!(
            record_transition(&mut store, &mut emp, &p, r),
            Err(LearnError::InconsistentRecord(_))
        ));
        let mut r = rec(&p, 1, &start, 0, 1);
        r.successor.belief = Belief::point(2, 0);
        assert!(record_transition(&mut store, &mut emp, &p, r).is_err());
        assert!(store.is_empty() && emp.is_empty());
    }
}
