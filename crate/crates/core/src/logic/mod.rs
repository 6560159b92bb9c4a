//! iLTL over belief distributions: atomic propositions are real functionals
//! of a belief that hold when strictly positive.
//!
//! Concrete syntax, loosest to tightest binding:
//!
//! | operator            | syntax            | associativity |
//! |---------------------|-------------------|---------------|
//! | implication         | `a -> b`          | right         |
//! | disjunction         | `a \| b`          | left          |
//! | conjunction         | `a & b`           | left          |
//! | until               | `a U b`, `a U[5] b` | left        |
//! | negation, next, finally, globally | `!a`, `X a`, `F a`, `F[3] a`, `G a`, `G[2] a` | prefix |
//!
//! Bare `U`/`F`/`G` are unbounded and only meaningful through an automaton;
//! bracketed forms are bounded and can be checked on finite traces with
//! [`eval_bounded`].

mod ap;
mod eval;
mod formula;
mod parser;
mod table;

pub use ap::{evaluate_ap, label, AtomicProposition, LabelSet, Labeler, BOUNDARY_WARN_TOL};
pub use eval::{eval_bounded, BeliefTrace};
pub use formula::{Bound, Formula};
pub use parser::parse_formula;
pub use table::{ApSpec, ApTable};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LogicError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown atomic proposition `{0}`")]
    UnknownProposition(String),

    #[error("proposition `{name}` expects a belief of dimension {expected}, got {found}")]
    DimensionMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("formula contains an unbounded temporal operator; use an automaton")]
    UnboundedOperator,

    #[error("trace of length {len} is too short; {needed} positions are needed")]
    TraceTooShort { needed: usize, len: usize },

    #[error("empty trace")]
    EmptyTrace,

    #[error("ap table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, LogicError>;
