//! The product of a belief MDP with an LDBA: states `(b, q)`, actions
//! `A ∪ {ε-moves}`, and the Büchi target `B× = {(b, q) | q ∈ B}`.
//!
//! A base action updates the belief with the observation received and moves
//! the automaton on the label of the belief it left, `q' = δ(q, L(b))`. An
//! ε-move changes only `q`; it takes no time, earns nothing and is not
//! discounted.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ldba::Ldba;
use crate::logic::{ApTable, AtomicProposition, LabelSet, Labeler, LogicError};
use crate::pomdp::{Belief, HiddenState, Pomdp, PomdpError};

#[derive(Debug, Error)]
pub enum ProductError {
    #[error(transparent)]
    Pomdp(#[from] PomdpError),

    #[error(transparent)]
    Logic(#[from] LogicError),

    #[error("ε-move {edge} is not available at automaton state `{state}`")]
    EpsilonUnavailable { edge: usize, state: String },

    #[error("action index {0} out of range")]
    UnknownAction(usize),

    #[error("base action needs an observation")]
    MissingObservation,

    #[error("ε-moves do not consume observations")]
    UnexpectedObservation,

    #[error("propositions do not match the automaton alphabet: {0}")]
    AlphabetMismatch(String),
}

pub type Result<T> = std::result::Result<T, ProductError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductAction {
    /// A model action, by index.
    Base(usize),
    /// An ε-edge of the automaton, by its position in the edge list.
    Epsilon(usize),
}

impl ProductAction {
    pub fn is_epsilon(self) -> bool {
        matches!(self, ProductAction::Epsilon(_))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductState {
    pub belief: Belief,
    pub q: usize,
}

impl ProductState {
    pub fn new(belief: Belief, q: usize) -> Self {
        ProductState { belief, q }
    }
}

/// Beliefs compare up to the belief tolerance, automaton states exactly.
impl PartialEq for ProductState {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.belief.approx_eq(&other.belief)
    }
}

impl fmt::Display for ProductState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.belief.probs().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p:.4}")?;
        }
        write!(f, "; q{})", self.q)
    }
}

/// Base actions in model order, then one ε-action per edge leaving `q`.
pub fn available_actions(model: &Pomdp, aut: &Ldba, ps: &ProductState) -> Vec<ProductAction> {
    (0..model.n_actions())
        .map(ProductAction::Base)
        .chain(aut.epsilon_from(ps.q).map(ProductAction::Epsilon))
        .collect()
}

/// One product transition. `o` is the observation received after a base
/// action and must be `None` for an ε-move.
pub fn product_step(
    model: &Pomdp,
    aut: &Ldba,
    labeler: &Labeler,
    ps: &ProductState,
    act: ProductAction,
    o: Option<usize>,
) -> Result<ProductState> {
    match act {
        ProductAction::Base(a) => {
            if a >= model.n_actions() {
                return Err(ProductError::UnknownAction(a));
            }
            let o = o.ok_or(ProductError::MissingObservation)?;
            let lbl = labeler.label(&ps.belief)?;
            let belief = model.belief_update(&ps.belief, a, o)?;
            Ok(ProductState {
                belief,
                q: aut.step(ps.q, lbl),
            })
        }
        ProductAction::Epsilon(e) => {
            if o.is_some() {
                return Err(ProductError::UnexpectedObservation);
            }
            let edge = aut
                .epsilon_edges()
                .get(e)
                .filter(|edge| edge.from == ps.q)
                .ok_or_else(|| ProductError::EpsilonUnavailable {
                    edge: e,
                    state: aut.state_name(ps.q).to_string(),
                })?;
            Ok(ProductState {
                belief: ps.belief.clone(),
                q: edge.to,
            })
        }
    }
}

pub fn product_reward(model: &Pomdp, ps: &ProductState, act: ProductAction) -> f64 {
    match act {
        ProductAction::Base(a) => model.belief_reward(&ps.belief, a),
        ProductAction::Epsilon(_) => 0.0,
    }
}

pub fn is_buchi(ps: &ProductState, aut: &Ldba) -> bool {
    aut.is_accepting(ps.q)
}

/// A successor of a base action, with observations that lead to the same
/// posterior merged.
#[derive(Debug, Clone)]
pub struct ProductSuccessor {
    pub prob: f64,
    pub observations: Vec<usize>,
    pub state: ProductState,
}

/// Model, automaton and labeling bundled together.
#[derive(Debug, Clone)]
pub struct Product {
    model: Pomdp,
    aut: Ldba,
    labeler: Labeler,
}

impl Product {
    /// `aps` must name the automaton's propositions in the automaton's order.
    pub fn new(model: Pomdp, aut: Ldba, aps: Vec<AtomicProposition>) -> Result<Self> {
        let names: Vec<&str> = aps.iter().map(|p| p.name()).collect();
        if names != aut.aps().iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(ProductError::AlphabetMismatch(format!(
                "automaton reads {:?}, got {:?}",
                aut.aps(),
                names
            )));
        }
        if let Some(p) = aps.iter().find(|p| p.dim() != model.n_states()) {
            return Err(ProductError::Logic(LogicError::DimensionMismatch {
                name: p.name().to_string(),
                expected: model.n_states(),
                found: p.dim(),
            }));
        }
        Ok(Product {
            model,
            aut,
            labeler: Labeler::new(aps),
        })
    }

    /// Looks the automaton's propositions up in `table`.
    pub fn from_table(model: Pomdp, aut: Ldba, table: &ApTable) -> Result<Self> {
        let aps = table.select(aut.aps())?;
        Self::new(model, aut, aps)
    }

    pub fn with_label_threshold(mut self, eps: f64) -> Self {
        self.labeler = self.labeler.with_threshold(eps);
        self
    }

    pub fn model(&self) -> &Pomdp {
        &self.model
    }

    pub fn automaton(&self) -> &Ldba {
        &self.aut
    }

    pub fn labeler(&self) -> &Labeler {
        &self.labeler
    }

    pub fn initial(&self) -> ProductState {
        ProductState::new(self.model.initial(), self.aut.initial())
    }

    pub fn label(&self, b: &Belief) -> LabelSet {
        self.labeler.label_of(b)
    }

    pub fn n_automaton_states(&self) -> usize {
        self.aut.n_states()
    }

    pub fn available_actions(&self, ps: &ProductState) -> Vec<ProductAction> {
        available_actions(&self.model, &self.aut, ps)
    }

    /// Actions available at automaton state `q`; they do not depend on the
    /// belief.
    pub fn actions_at(&self, q: usize) -> Vec<ProductAction> {
        (0..self.model.n_actions())
            .map(ProductAction::Base)
            .chain(self.aut.epsilon_from(q).map(ProductAction::Epsilon))
            .collect()
    }

    /// Whether the automaton move out of `q` depends on the label at all.
    pub fn label_sensitive(&self, q: usize) -> bool {
        let first = self.aut.step(q, LabelSet::EMPTY);
        LabelSet::all(self.aut.aps().len()).any(|l| self.aut.step(q, l) != first)
    }

    /// Like [`Product::available_actions`], but once `eps_run` consecutive
    /// ε-moves have been taken (at most `|Q|`), only base actions remain.
    pub fn allowed_actions(&self, ps: &ProductState, eps_run: usize) -> Vec<ProductAction> {
        let mut acts = self.available_actions(ps);
        if eps_run >= self.aut.n_states() {
            acts.retain(|a| !a.is_epsilon());
        }
        acts
    }

    pub fn step(
        &self,
        ps: &ProductState,
        act: ProductAction,
        o: Option<usize>,
    ) -> Result<ProductState> {
        product_step(&self.model, &self.aut, &self.labeler, ps, act, o)
    }

    pub fn reward(&self, ps: &ProductState, act: ProductAction) -> f64 {
        product_reward(&self.model, ps, act)
    }

    pub fn is_buchi(&self, ps: &ProductState) -> bool {
        is_buchi(ps, &self.aut)
    }

    /// Discount applied after `act`: the model's for base actions, none for ε.
    pub fn discount(&self, act: ProductAction) -> f64 {
        match act {
            ProductAction::Base(_) => self.model.discount(),
            ProductAction::Epsilon(_) => 1.0,
        }
    }

    /// Distribution over successors. ε-moves are deterministic.
    pub fn successors(
        &self,
        ps: &ProductState,
        act: ProductAction,
    ) -> Result<Vec<ProductSuccessor>> {
        match act {
            ProductAction::Epsilon(_) => Ok(vec![ProductSuccessor {
                prob: 1.0,
                observations: vec![],
                state: self.step(ps, act, None)?,
            }]),
            ProductAction::Base(a) => {
                if a >= self.model.n_actions() {
                    return Err(ProductError::UnknownAction(a));
                }
                let q2 = self.aut.step(ps.q, self.labeler.label(&ps.belief)?);
                let mut out: Vec<ProductSuccessor> = Vec::new();
                for s in self.model.successors(&ps.belief, a) {
                    match out.iter_mut().find(|x| x.state.belief.approx_eq(&s.belief)) {
                        Some(x) => {
                            x.prob += s.likelihood;
                            x.observations.push(s.observation);
                        }
                        None => out.push(ProductSuccessor {
                            prob: s.likelihood,
                            observations: vec![s.observation],
                            state: ProductState::new(s.belief, q2),
                        }),
                    }
                }
                Ok(out)
            }
        }
    }

    /// Samples one transition against a hidden state. Returns the observation
    /// received, if any.
    pub fn sample(
        &self,
        ps: &ProductState,
        act: ProductAction,
        hidden: &mut HiddenState,
    ) -> Result<(ProductState, Option<usize>)> {
        match act {
            ProductAction::Base(a) => {
                if a >= self.model.n_actions() {
                    return Err(ProductError::UnknownAction(a));
                }
                let o = hidden.step(&self.model, a);
                Ok((self.step(ps, act, Some(o))?, Some(o)))
            }
            ProductAction::Epsilon(_) => Ok((self.step(ps, act, None)?, None)),
        }
    }

    pub fn action_name(&self, act: ProductAction) -> String {
        match act {
            ProductAction::Base(a) => self.model.actions()[a].clone(),
            ProductAction::Epsilon(e) => self.aut.epsilon_edges()[e].name.clone(),
        }
    }

    /// Parses an action name: model actions first, then ε-edge names.
    pub fn action_by_name(&self, name: &str) -> Option<ProductAction> {
        self.model
            .action_index(name)
            .map(ProductAction::Base)
            .or_else(|| {
                self.aut
                    .epsilon_edges()
                    .iter()
                    .position(|e| e.name == name)
                    .map(ProductAction::Epsilon)
            })
    }
}
