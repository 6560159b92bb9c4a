use serde::{Deserialize, Serialize};

use super::{PomdpError, Result};

/// Two beliefs are the same belief iff their max-norm distance is at most this.
pub const BELIEF_TOL: f64 = 1e-9;

/// A probability distribution over the states of a model, indexed by the
/// model's state order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Checks nonnegativity and normalization (within [`BELIEF_TOL`]).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(PomdpError::InvalidBelief("empty distribution".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < -BELIEF_TOL)
        {
            return Err(PomdpError::InvalidBelief(format!("entry {i} is {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > BELIEF_TOL {
            return Err(PomdpError::InvalidBelief(format!("entries sum to {sum}")));
        }
        Ok(Belief(probs.into_iter().map(|p| p.max(0.0)).collect()))
    }

    /// Wraps a vector that the caller already knows is a distribution.
    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Belief(probs)
    }

    /// Point mass on state `s`.
    pub fn point(n: usize, s: usize) -> Self {
        let mut v = vec![0.0; n];
        v[s] = 1.0;
        Belief(v)
    }

    pub fn uniform(n: usize) -> Self {
        Belief(vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(b, x)| b * x).sum()
    }

    pub fn distance(&self, other: &Belief) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Tolerant equality (max-norm ≤ [`BELIEF_TOL`]).
    pub fn approx_eq(&self, other: &Belief) -> bool {
        self.dim() == other.dim() && self.distance(other) <= BELIEF_TOL
    }

    /// Convex combination `λ·self + (1-λ)·other`.
    pub fn mix(&self, other: &Belief, lambda: f64) -> Belief {
        Belief(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        )
    }

    /// Index of the state carrying all of the mass, if any.
    pub fn support_point(&self) -> Option<usize> {
        let i = self.0.iter().position(|p| (p - 1.0).abs() <= BELIEF_TOL)?;
        Some(i)
    }

    /// Quantized identity used to index revisited beliefs.
    pub fn key(&self) -> BeliefKey {
        BeliefKey(
            self.0
                .iter()
                .map(|p| (p * KEY_SCALE).round() as i64)
                .collect(),
        )
    }
}

/// Entries are rounded to this many units per probability mass (6 decimals).
pub const KEY_SCALE: f64 = 1e6;

/// A belief rounded entrywise to 6 decimal digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefKey(pub Vec<i64>);

impl BeliefKey {
    /// The rounded belief, renormalized.
    pub fn to_belief(&self) -> Belief {
        let total: i64 = self.0.iter().sum();
        Belief(self.0.iter().map(|&k| k as f64 / total as f64).collect())
    }
}
