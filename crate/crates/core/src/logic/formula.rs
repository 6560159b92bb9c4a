use std::fmt;
use std::sync::Arc;

use super::AtomicProposition;

/// Step bound of a temporal operator; `None` is unbounded.
pub type Bound = Option<u32>;

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Ap(Arc<AtomicProposition>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Bound, Box<Formula>, Box<Formula>),
    Eventually(Bound, Box<Formula>),
    Always(Bound, Box<Formula>),
}

impl Formula {
    pub fn ap(p: AtomicProposition) -> Self {
        Formula::Ap(Arc::new(p))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, rhs: Formula) -> Self {
        Formula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Formula) -> Self {
        Formula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: Formula) -> Self {
        Formula::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn next(self) -> Self {
        Formula::Next(Box::new(self))
    }

    pub fn until(self, bound: Bound, rhs: Formula) -> Self {
        Formula::Until(bound, Box::new(self), Box::new(rhs))
    }

    pub fn eventually(self, bound: Bound) -> Self {
        Formula::Eventually(bound, Box::new(self))
    }

    pub fn always(self, bound: Bound) -> Self {
        Formula::Always(bound, Box::new(self))
    }

    /// Rewrites into the core syntax `true | f | ¬φ | φ∧φ | Xφ | φ U_T φ`:
    /// `φ∨ψ ≡ ¬(¬φ∧¬ψ)`, `φ→ψ ≡ ¬φ∨ψ`, `F_T φ ≡ true U_T φ`, `G_T φ ≡ ¬F_T¬φ`.
    pub fn desugar(&self) -> Formula {
        use Formula::*;
        match self {
            True | Ap(_) => self.clone(),
            Not(f) => f.desugar().not(),
            And(a, b) => a.desugar().and(b.desugar()),
            Or(a, b) => a.desugar().not().and(b.desugar().not()).not(),
            Implies(a, b) => a.desugar().and(b.desugar().not()).not(),
            Next(f) => f.desugar().next(),
            Until(t, a, b) => a.desugar().until(*t, b.desugar()),
            Eventually(t, f) => True.until(*t, f.desugar()),
            Always(t, f) => True.until(*t, f.desugar().not()).not(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        use Formula::*;
        match self {
            True | Ap(_) => true,
            Not(f) | Next(f) => f.is_bounded(),
            And(a, b) | Or(a, b) | Implies(a, b) => a.is_bounded() && b.is_bounded(),
            Until(t, a, b) => t.is_some() && a.is_bounded() && b.is_bounded(),
            Eventually(t, f) | Always(t, f) => t.is_some() && f.is_bounded(),
        }
    }

    /// Number of trace positions past the first one that evaluation may read.
    /// `None` if some operator is unbounded.
    pub fn horizon(&self) -> Option<usize> {
        use Formula::*;
        Some(match self {
            True | Ap(_) => 0,
            Not(f) => f.horizon()?,
            Next(f) => 1 + f.horizon()?,
            And(a, b) | Or(a, b) | Implies(a, b) => a.horizon()?.max(b.horizon()?),
            Until(t, a, b) => (*t)? as usize + a.horizon()?.max(b.horizon()?),
            Eventually(t, f) | Always(t, f) => (*t)? as usize + f.horizon()?,
        })
    }

    pub fn depth(&self) -> usize {
        use Formula::*;
        match self {
            True | Ap(_) => 1,
            Not(f) | Next(f) | Eventually(_, f) | Always(_, f) => 1 + f.depth(),
            And(a, b) | Or(a, b) | Implies(a, b) | Until(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Distinct proposition names, in first-occurrence order.
    pub fn proposition_names(&self) -> Vec<String> {
        fn walk(f: &Formula, out: &mut Vec<String>) {
            use Formula::*;
            match f {
                True => {}
                Ap(p) => {
                    if !out.iter().any(|n| n == p.name()) {
                        out.push(p.name().to_string());
                    }
                }
                Not(g) | Next(g) | Eventually(_, g) | Always(_, g) => walk(g, out),
                And(a, b) | Or(a, b) | Implies(a, b) | Until(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

fn bound(t: &Bound) -> String {
    t.map(|t| format!("[{t}]")).unwrap_or_default()
}

/// Prints in the concrete syntax accepted by [`super::parse_formula`]; binary
/// operators are always parenthesized.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            True => write!(f, "true"),
            Ap(p) => write!(f, "{}", p.name()),
            Not(g) => write!(f, "!{g}"),
            And(a, b) => write!(f, "({a} & {b})"),
            Or(a, b) => write!(f, "({a} | {b})"),
            Implies(a, b) => write!(f, "({a} -> {b})"),
            Next(g) => write!(f, "X {g}"),
            Until(t, a, b) => write!(f, "({a} U{} {b})", bound(t)),
            Eventually(t, g) => write!(f, "F{} {g}", bound(t)),
            Always(t, g) => write!(f, "G{} {g}", bound(t)),
        }
    }
}
