//! Limit-deterministic Büchi automata over proposition labels.
//!
//! The alphabet is `2^AP` for an ordered list of proposition names; a label is
//! a [`LabelSet`] bit mask over that list. Label moves are total and
//! deterministic, stored as a dense `[state][mask]` table. ε-moves are named
//! edges out of the initial component; a state may have several.

mod accept;
mod guard;
mod io;
mod template;

pub use accept::{lasso_accepted, LassoRun};
pub use guard::Guard;
pub use io::{EpsilonSpec, LdbaFile, TransitionSpec};
pub use template::{template_automaton, template_for_formula, TemplateKind};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::LabelSet;

/// Alphabets larger than this are rejected; the step table has `2^|AP|`
/// columns per state.
pub const MAX_APS: usize = 16;

#[derive(Debug, Error)]
pub enum LdbaError {
    #[error("automaton format error: {0}")]
    Format(String),

    #[error("automaton is not a valid LDBA:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("unsupported pattern: {0}")]
    UnsupportedPattern(String),

    #[error("invalid run: {0}")]
    InvalidRun(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LdbaError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsilonEdge {
    pub from: usize,
    pub to: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ldba {
    states: Vec<String>,
    aps: Vec<String>,
    initial: usize,
    accepting: Vec<bool>,
    accepting_component: Vec<bool>,
    step: Vec<Vec<usize>>,
    epsilon: Vec<EpsilonEdge>,
}

impl Ldba {
    /// Builds an automaton from explicit tables and checks the LDBA
    /// conditions. `step[q][mask]` must cover all `2^|aps|` masks.
    pub fn from_parts(
        states: Vec<String>,
        aps: Vec<String>,
        initial: usize,
        accepting: Vec<usize>,
        accepting_component: Vec<usize>,
        step: Vec<Vec<usize>>,
        epsilon: Vec<EpsilonEdge>,
    ) -> Result<Self> {
        let n = states.len();
        let mut problems = Vec::new();
        if n == 0 {
            return Err(LdbaError::Validation(
                vec!["automaton has no states".into()],
            ));
        }
        if aps.len() > MAX_APS {
            return Err(LdbaError::Format(format!(
                "{} propositions; at most {MAX_APS} are supported",
                aps.len()
            )));
        }
        for (i, a) in aps.iter().enumerate() {
            if aps[..i].contains(a) {
                problems.push(format!("proposition `{a}` listed twice"));
            }
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                problems.push(format!("state `{s}` listed twice"));
            }
        }
        let name = |q: usize| states.get(q).cloned().unwrap_or_else(|| format!("#{q}"));
        if initial >= n {
            problems.push(format!("initial state {} does not exist", name(initial)));
        }

        let mut is_acc = vec![false; n];
        for &q in &accepting {
            if q >= n {
                problems.push(format!("accepting state {} does not exist", name(q)));
            } else {
                is_acc[q] = true;
            }
        }
        let mut in_qa = vec![false; n];
        for &q in &accepting_component {
            if q >= n {
                problems.push(format!(
                    "accepting-component state {} does not exist",
                    name(q)
                ));
            } else {
                in_qa[q] = true;
            }
        }

        let masks = 1usize << aps.len();
        if step.len() != n {
            problems.push(format!("step table has {} rows for {n} states", step.len()));
        }
        for (q, row) in step.iter().enumerate().take(n) {
            if row.len() != masks {
                problems.push(format!(
                    "state `{}` has {} label successors, expected {masks}",
                    name(q),
                    row.len()
                ));
                continue;
            }
            for (m, &to) in row.iter().enumerate() {
                if to >= n {
                    problems.push(format!(
                        "`{}` steps to a missing state on mask {m}",
                        name(q)
                    ));
                } else if in_qa[q] && !in_qa[to] {
                    problems.push(format!(
                        "accepting-component state `{}` leaves the component to `{}` on {}",
                        name(q),
                        name(to),
                        mask_text(&aps, LabelSet(m as u64))
                    ));
                }
            }
        }
        for q in 0..n {
            if is_acc[q] && !in_qa[q] {
                problems.push(format!(
                    "accepting state `{}` is outside the accepting component",
                    name(q)
                ));
            }
        }
        for (i, e) in epsilon.iter().enumerate() {
            if e.from >= n || e.to >= n {
                problems.push(format!("ε-move `{}` references a missing state", e.name));
                continue;
            }
            if in_qa[e.from] {
                problems.push(format!(
                    "accepting-component state `{}` has ε-move `{}`",
                    name(e.from),
                    e.name
                ));
            }
            if epsilon[..i].iter().any(|o| o.name == e.name) {
                problems.push(format!("ε-move name `{}` used twice", e.name));
            }
        }
        if !problems.is_empty() {
            return Err(LdbaError::Validation(problems));
        }
        Ok(Ldba {
            states,
            aps,
            initial,
            accepting: is_acc,
            accepting_component: in_qa,
            step,
            epsilon,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.states[q]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn aps(&self) -> &[String] {
        &self.aps
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> Vec<usize> {
        (0..self.n_states())
            .filter(|&q| self.accepting[q])
            .collect()
    }

    pub fn in_accepting_component(&self, q: usize) -> bool {
        self.accepting_component[q]
    }

    /// Number of distinct labels, `2^|AP|`.
    pub fn n_labels(&self) -> usize {
        1 << self.aps.len()
    }

    /// The unique label successor `δ(q, lbl)`. Bits beyond the alphabet are
    /// ignored.
    pub fn step(&self, q: usize, lbl: LabelSet) -> usize {
        let mask = lbl.0 as usize & (self.n_labels() - 1);
        self.step[q][mask]
    }

    /// All ε-edges, in declaration order. Their position is the ε-action id.
    pub fn epsilon_edges(&self) -> &[EpsilonEdge] {
        &self.epsilon
    }

    /// Ids of the ε-edges leaving `q`.
    pub fn epsilon_from(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.epsilon
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.from == q)
            .map(|(i, _)| i)
    }

    /// `δ(q, ε)` as a sorted, deduplicated state list.
    pub fn epsilon_successors(&self, q: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.epsilon_from(q).map(|i| self.epsilon[i].to).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Label mask over this alphabet for the given proposition names.
    pub fn label_of_names<S: AsRef<str>>(&self, names: &[S]) -> Result<LabelSet> {
        let mut set = LabelSet::EMPTY;
        for n in names {
            let i = self
                .aps
                .iter()
                .position(|a| a == n.as_ref())
                .ok_or_else(|| {
                    LdbaError::Format(format!("unknown proposition `{}`", n.as_ref()))
                })?;
            set = set.with(i);
        }
        Ok(set)
    }
}

pub(crate) fn mask_text(aps: &[String], m: LabelSet) -> String {
    let names: Vec<&str> = (0..aps.len())
        .filter(|&i| m.contains(i))
        .map(|i| aps[i].as_str())
        .collect();
    format!("{{{}}}", names.join(", "))
}
