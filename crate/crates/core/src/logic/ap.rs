use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{LogicError, Result};
use crate::pomdp::Belief;

/// Values this close to zero are reported as boundary cases when labeling.
pub const BOUNDARY_WARN_TOL: f64 = 1e-12;

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Affine { weights: Vec<f64>, offset: f64 },
    Nonlinear { dim: usize, eval: Evaluator },
}

/// A real functional `f` over beliefs; the proposition holds at `b` iff
/// `f(b) > 0`.
#[derive(Clone)]
pub struct AtomicProposition {
    name: String,
    kind: Kind,
}

impl AtomicProposition {
    /// `f(b) = weights · b + offset`.
    pub fn affine(name: impl Into<String>, weights: Vec<f64>, offset: f64) -> Self {
        AtomicProposition {
            name: name.into(),
            kind: Kind::Affine { weights, offset },
        }
    }

    /// `f(b) = scale · P_b(subset) + shift`, the scaled indicator functional
    /// of a set of states.
    pub fn indicator(
        name: impl Into<String>,
        n_states: usize,
        subset: &[usize],
        scale: f64,
        shift: f64,
    ) -> Self {
        let mut w = vec![0.0; n_states];
        for &s in subset {
            w[s] = scale;
        }
        Self::affine(name, w, shift)
    }

    /// A registered nonlinear functional.
    pub fn nonlinear(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        AtomicProposition {
            name: name.into(),
            kind: Kind::Nonlinear {
                dim,
                eval: Arc::new(eval),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            Kind::Affine { weights, .. } => weights.len(),
            Kind::Nonlinear { dim, .. } => *dim,
        }
    }

    /// `(weights, offset)` for affine propositions.
    pub fn affine_parts(&self) -> Option<(&[f64], f64)> {
        match &self.kind {
            Kind::Affine { weights, offset } => Some((weights, *offset)),
            Kind::Nonlinear { .. } => None,
        }
    }

    /// Multiplies the functional by `c`. Positive `c` preserves every label.
    pub fn scaled(&self, c: f64) -> Self {
        let kind = match &self.kind {
            Kind::Affine { weights, offset } => Kind::Affine {
                weights: weights.iter().map(|w| w * c).collect(),
                offset: offset * c,
            },
            Kind::Nonlinear { dim, eval } => {
                let inner = eval.clone();
                Kind::Nonlinear {
                    dim: *dim,
                    eval: Arc::new(move |b: &[f64]| c * inner(b)),
                }
            }
        };
        AtomicProposition {
            name: self.name.clone(),
            kind,
        }
    }

    pub fn eval(&self, b: &Belief) -> Result<f64> {
        if b.dim() != self.dim() {
            return Err(LogicError::DimensionMismatch {
                name: self.name.clone(),
                expected: self.dim(),
                found: b.dim(),
            });
        }
        Ok(match &self.kind {
            Kind::Affine { weights, offset } => b.dot(weights) + offset,
            Kind::Nonlinear { eval, .. } => eval(b.probs()),
        })
    }
}

impl fmt::Debug for AtomicProposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Affine { weights, offset } => f
                .debug_struct("AtomicProposition")
                .field("name", &self.name)
                .field("weights", weights)
                .field("offset", offset)
                .finish(),
            Kind::Nonlinear { dim, .. } => f
                .debug_struct("AtomicProposition")
                .field("name", &self.name)
                .field("nonlinear_dim", dim)
                .finish(),
        }
    }
}

impl PartialEq for AtomicProposition {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && match (&self.kind, &other.kind) {
                (
                    Kind::Affine { weights, offset },
                    Kind::Affine {
                        weights: w2,
                        offset: o2,
                    },
                ) => weights == w2 && offset == o2,
                (Kind::Nonlinear { eval, .. }, Kind::Nonlinear { eval: e2, .. }) => {
                    Arc::ptr_eq(eval, e2)
                }
                _ => false,
            }
    }
}

pub fn evaluate_ap(f: &AtomicProposition, b: &Belief) -> Result<f64> {
    f.eval(b)
}

/// Names of the propositions holding at `b` (strictly positive value).
pub fn label(b: &Belief, aps: &[AtomicProposition]) -> Result<BTreeSet<String>> {
    let labeler = Labeler::new(aps.to_vec());
    let set = labeler.label(b)?;
    Ok(set.iter().map(|i| aps[i].name().to_string()).collect())
}

/// A subset of an ordered proposition list, as a bit mask.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct LabelSet(pub u64);

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet(0);

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        LabelSet(self.0 | 1 << i)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |&i| self.contains(i))
    }

    pub fn from_indices(idx: impl IntoIterator<Item = usize>) -> Self {
        idx.into_iter().fold(LabelSet::EMPTY, LabelSet::with)
    }

    /// All subsets of `k` propositions, in increasing mask order.
    pub fn all(k: usize) -> impl Iterator<Item = LabelSet> {
        (0..1u64 << k).map(LabelSet)
    }
}

/// Computes the label map `L(b)` for a fixed, ordered list of propositions.
#[derive(Debug, Clone, Default)]
pub struct Labeler {
    aps: Vec<AtomicProposition>,
    threshold: f64,
    /// Propositions already reported at a boundary; later cases go to debug.
    warned: Arc<AtomicU64>,
}

impl Labeler {
    pub fn new(aps: Vec<AtomicProposition>) -> Self {
        assert!(aps.len() <= 64, "at most 64 propositions per label");
        Labeler {
            aps,
            threshold: 0.0,
            warned: Arc::default(),
        }
    }

    /// A proposition is in the label iff its value exceeds `threshold`.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn aps(&self) -> &[AtomicProposition] {
        &self.aps
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn label(&self, b: &Belief) -> Result<LabelSet> {
        let mut set = LabelSet::EMPTY;
        for (i, ap) in self.aps.iter().enumerate() {
            let v = ap.eval(b)?;
            if (v - self.threshold).abs() <= BOUNDARY_WARN_TOL {
                let first = self.warned.fetch_or(1 << i, Ordering::Relaxed) & (1 << i) == 0;
                let level = if first {
                    log::Level::Warn
                } else {
                    log::Level::Debug
                };
                log::log!(
                    level,
                    "proposition `{}` is {v:e} at a belief, within {BOUNDARY_WARN_TOL:e} of its threshold",
                    ap.name()
                );
            }
            if v > self.threshold {
                set = set.with(i);
            }
        }
        Ok(set)
    }

    /// Like [`Labeler::label`] for beliefs already known to match in dimension.
    pub fn label_of(&self, b: &Belief) -> LabelSet {
        self.label(b).expect("belief dimension checked by caller")
    }

    pub fn names(&self, set: LabelSet) -> Vec<&str> {
        set.iter()
            .filter(|&i| i < self.aps.len())
            .map(|i| self.aps[i].name())
            .collect()
    }
}
