use serde::{Deserialize, Serialize};

use super::{Formula, LogicError, Result};
use crate::pomdp::Belief;

/// A finite execution `σ(0), σ(1), …` of belief states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefTrace {
    pub seq: Vec<Belief>,
}

impl BeliefTrace {
    pub fn new(seq: Vec<Belief>) -> Result<Self> {
        if seq.is_empty() {
            return Err(LogicError::EmptyTrace);
        }
        Ok(BeliefTrace { seq })
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }
}

/// Decides `σ ⊨ φ` for a formula whose temporal operators all carry bounds.
///
/// The trace must contain every position the formula can reach, i.e. at
/// least `1 + φ.horizon()` beliefs.
pub fn eval_bounded(phi: &Formula, trace: &BeliefTrace) -> Result<bool> {
    let h = phi.horizon().ok_or(LogicError::UnboundedOperator)?;
    if trace.seq.is_empty() {
        return Err(LogicError::EmptyTrace);
    }
    if trace.len() < h + 1 {
        return Err(LogicError::TraceTooShort {
            needed: h + 1,
            len: trace.len(),
        });
    }
    at(phi, &trace.seq, 0)
}

fn at(phi: &Formula, seq: &[Belief], t: usize) -> Result<bool> {
    use Formula::*;
    Ok(match phi {
        True => true,
        Ap(p) => p.eval(&seq[t])? > 0.0,
        Not(f) => !at(f, seq, t)?,
        And(a, b) => at(a, seq, t)? && at(b, seq, t)?,
        Or(a, b) => at(a, seq, t)? || at(b, seq, t)?,
        Implies(a, b) => !at(a, seq, t)? || at(b, seq, t)?,
        Next(f) => at(f, seq, t + 1)?,
        Until(bound, a, b) => {
            let bound = bound.ok_or(LogicError::UnboundedOperator)? as usize;
            for k in 0..=bound {
                if at(b, seq, t + k)? {
                    return Ok(true);
                }
                if !at(a, seq, t + k)? {
                    return Ok(false);
                }
            }
            false
        }
        Eventually(bound, f) => {
            let bound = bound.ok_or(LogicError::UnboundedOperator)? as usize;
            for k in 0..=bound {
                if at(f, seq, t + k)? {
                    return Ok(true);
                }
            }
            false
        }
        Always(bound, f) => {
            let bound = bound.ok_or(LogicError::UnboundedOperator)? as usize;
            for k in 0..=bound {
                if !at(f, seq, t + k)? {
                    return Ok(false);
                }
            }
            true
        }
    })
}
