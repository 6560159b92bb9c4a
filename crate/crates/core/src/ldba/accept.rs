use serde::{Deserialize, Serialize};

use super::{Ldba, LdbaError, Result};
use crate::logic::LabelSet;

/// An ultimately periodic run `prefix · cycle^ω` of automaton states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LassoRun {
    pub prefix: Vec<usize>,
    pub cycle: Vec<usize>,
}

impl Ldba {
    /// True iff `to` is reachable from `from` in one label or ε move.
    pub fn adjacent(&self, from: usize, to: usize) -> bool {
        (0..self.n_labels()).any(|m| self.step(from, LabelSet(m as u64)) == to)
            || self.epsilon_successors(from).contains(&to)
    }

    /// Decides whether the word `prefix · cycle^ω` has an accepting run,
    /// resolving the ε-choices nondeterministically.
    pub fn accepts_lasso_word(&self, prefix: &[LabelSet], cycle: &[LabelSet]) -> bool {
        assert!(!cycle.is_empty(), "lasso cycle must be nonempty");
        let p = prefix.len();
        let len = p + cycle.len();
        let letter = |i: usize| if i < p { prefix[i] } else { cycle[i - p] };
        let next_pos = |i: usize| if i + 1 < len { i + 1 } else { p };
        let n = self.n_states();
        let node = |q: usize, i: usize| q * len + i;

        let succ = |v: usize| -> Vec<usize> {
            let (q, i) = (v / len, v % len);
            let mut out = vec![node(self.step(q, letter(i)), next_pos(i))];
            out.extend(self.epsilon_successors(q).into_iter().map(|q2| node(q2, i)));
            out
        };
        let reach_from = |starts: Vec<usize>| {
            let mut seen = vec![false; n * len];
            let mut stack = starts;
            while let Some(v) = stack.pop() {
                if !seen[v] {
                    seen[v] = true;
                    stack.extend(succ(v));
                }
            }
            seen
        };

        let reachable = reach_from(vec![node(self.initial(), 0)]);
        (0..n * len)
            .filter(|&v| reachable[v] && self.is_accepting(v / len))
            .any(|v| reach_from(succ(v))[v])
    }
}

/// Büchi acceptance of a concrete run: some accepting state lies on the cycle.
pub fn lasso_accepted(aut: &Ldba, run: &LassoRun) -> Result<bool> {
    if run.cycle.is_empty() {
        return Err(LdbaError::InvalidRun("empty cycle".into()));
    }
    let n = aut.n_states();
    if let Some(&q) = run.prefix.iter().chain(&run.cycle).find(|&&q| q >= n) {
        return Err(LdbaError::InvalidRun(format!("state {q} does not exist")));
    }
    let first = run.prefix.first().unwrap_or(&run.cycle[0]);
    if *first != aut.initial() {
        return Err(LdbaError::InvalidRun(format!(
            "run starts at `{}`, not the initial state",
            aut.state_name(*first)
        )));
    }
    let seq: Vec<usize> = run
        .prefix
        .iter()
        .chain(&run.cycle)
        .chain(std::iter::once(&run.cycle[0]))
        .copied()
        .collect();
    for w in seq.windows(2) {
        if !aut.adjacent(w[0], w[1]) {
            return Err(LdbaError::InvalidRun(format!(
                "no move from `{}` to `{}`",
                aut.state_name(w[0]),
                aut.state_name(w[1])
            )));
        }
    }
    Ok(run.cycle.iter().any(|&q| aut.is_accepting(q)))
}
