use std::collections::BTreeMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::AlphaVector;
use crate::logic::{LabelSet, Labeler};
use crate::pomdp::Belief;

/// A vector survives LP pruning only if it beats every other remaining
/// vector by more than this somewhere on the simplex.
pub const LP_MARGIN: f64 = 1e-12;

/// Distinct witness beliefs for point-based pruning.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WitnessSet(Vec<Belief>);

impl WitnessSet {
    /// Drops beliefs equal (within tolerance) to an earlier one.
    pub fn new(beliefs: impl IntoIterator<Item = Belief>) -> Self {
        let mut out: Vec<Belief> = Vec::new();
        for b in beliefs {
            if !out.iter().any(|x| x.approx_eq(&b)) {
                out.push(b);
            }
        }
        WitnessSet(out)
    }

    pub fn beliefs(&self) -> &[Belief] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `true` if `a ≥ b` entrywise.
fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// Largest `d` such that `θ·b ≥ θ'·b + d` for every `θ'` in `others` at some
/// belief `b`, together with that belief. `None` if the solver fails.
fn lp_margin(theta: &[f64], others: &[&[f64]]) -> Option<(f64, Vec<f64>)> {
    let n = theta.len();
    let span = others
        .iter()
        .flat_map(|o| o.iter().zip(theta).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
        + 1.0;
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let b: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let d = lp.add_var(1.0, (-span, span));
    lp.add_constraint(b.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
    for o in others {
        let mut row: Vec<_> = (0..n).map(|s| (b[s], theta[s] - o[s])).collect();
        row.push((d, -1.0));
        lp.add_constraint(row, ComparisonOp::Ge, 0.0);
    }
    let outcome = lp.solve().ok()?;
    let sol = outcome.solution()?;
    let witness: Vec<f64> = b.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
    Some((sol.objective(), witness))
}

/// Indices of a minimal subset of `thetas` with the same upper envelope over
/// the simplex, in input order. Exact duplicates keep their first copy.
pub fn prune_lp_indices(thetas: &[&[f64]]) -> Vec<usize> {
    let k = thetas.len();
    let mut alive: Vec<bool> = vec![true; k];
    for i in 0..k {
        for j in 0..k {
            if i == j || !alive[j] {
                continue;
            }
            if dominates(thetas[j], thetas[i]) && (thetas[j] != thetas[i] || j < i) {
                alive[i] = false;
                break;
            }
        }
    }
    for i in 0..k {
        if !alive[i] {
            continue;
        }
        let others: Vec<&[f64]> = (0..k)
            .filter(|&j| j != i && alive[j])
            .map(|j| thetas[j])
            .collect();
        if others.is_empty() {
            continue;
        }
        let keep = match lp_margin(thetas[i], &others) {
            Some((d, _)) if d > LP_MARGIN => true,
            Some((_, w)) => {
                // Guard against solver round-off on the removal side.
                let mine = dot(thetas[i], &w);
                let best = others.iter().map(|o| dot(o, &w)).fold(f64::MIN, f64::max);
                mine - best > LP_MARGIN
            }
            None => true,
        };
        alive[i] = keep;
    }
    (0..k).filter(|&i| alive[i]).collect()
}

/// Drops vectors that never attain the maximum strictly.
pub fn prune_lp(set: &[AlphaVector]) -> Vec<AlphaVector> {
    let thetas: Vec<&[f64]> = set.iter().map(|v| v.theta.as_slice()).collect();
    prune_lp_indices(&thetas)
        .into_iter()
        .map(|i| set[i].clone())
        .collect()
}

/// Keeps the vectors that are best at one or more witnesses (first on ties).
pub fn prune_pointbased(set: &[AlphaVector], w: &WitnessSet) -> Vec<AlphaVector> {
    if set.len() <= 1 {
        return set.to_vec();
    }
    let mut keep = vec![false; set.len()];
    for b in w.beliefs() {
        if let Some((i, _)) = super::best_in(set, b, LabelSet::EMPTY) {
            keep[i] = true;
        }
    }
    set.iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(v, _)| v.clone())
        .collect()
}

fn by_label(set: &[AlphaVector]) -> BTreeMap<Option<LabelSet>, Vec<usize>> {
    let mut groups: BTreeMap<Option<LabelSet>, Vec<usize>> = BTreeMap::new();
    for (i, v) in set.iter().enumerate() {
        groups.entry(v.label).or_default().push(i);
    }
    groups
}

/// LP pruning applied within each label group.
pub(crate) fn prune_lp_labeled(set: &[AlphaVector]) -> Vec<AlphaVector> {
    let mut keep = vec![false; set.len()];
    for idx in by_label(set).values() {
        let thetas: Vec<&[f64]> = idx.iter().map(|&i| set[i].theta.as_slice()).collect();
        for j in prune_lp_indices(&thetas) {
            keep[idx[j]] = true;
        }
    }
    set.iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(v, _)| v.clone())
        .collect()
}

/// Point-based pruning within each label group, using the witnesses whose
/// label the group applies to. A group with no such witness keeps its newest
/// vector.
pub(crate) fn prune_pointbased_labeled(
    set: &[AlphaVector],
    w: &WitnessSet,
    labels: &[LabelSet],
) -> Vec<AlphaVector> {
    let mut keep = vec![false; set.len()];
    for (tag, idx) in by_label(set) {
        let mut any = false;
        for (b, &l) in w.beliefs().iter().zip(labels) {
            if tag.is_some_and(|t| t != l) {
                continue;
            }
            any = true;
            let mut best: Option<(usize, f64)> = None;
            for &i in &idx {
                let x = set[i].value(b);
                if best.is_none_or(|(_, y)| x > y) {
                    best = Some((i, x));
                }
            }
            if let Some((i, _)) = best {
                keep[i] = true;
            }
        }
        if !any {
            keep[*idx.last().unwrap()] = true;
        }
    }
    set.iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(v, _)| v.clone())
        .collect()
}

pub(crate) fn witness_labels(w: &WitnessSet, labeler: &Labeler) -> Vec<LabelSet> {
    w.beliefs().iter().map(|b| labeler.label_of(b)).collect()
}
